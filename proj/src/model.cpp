#include "pfrec/model.hpp"

#include <cmath>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pfrec/errors.hpp"
#include "src/hyper_json.hpp"
#include "src/io_util.hpp"

namespace pfrec {

namespace {

void save_matrix_tsv(const Matrix& m, const std::filesystem::path& file) {
  auto out = open_output(file);
  for (std::uint32_t r = 0; r < m.rows(); ++r)
    for (std::uint32_t c = 0; c < m.cols(); ++c)
      out << r << '\t' << c << '\t' << g17(m(r, c)) << '\n';
}

Matrix load_matrix_tsv(const std::filesystem::path& file, std::uint32_t rows,
                       std::uint32_t cols) {
  auto in = open_input(file);
  Matrix m(rows, cols);
  std::uint32_t r = 0;
  std::uint32_t c = 0;
  std::string value;
  for (std::size_t n = 0; n < std::size_t(rows) * cols; ++n) {
    if (!(in >> r >> c >> value))
      throw IoError("truncated matrix file: " + file.string());
    if (r >= rows || c >= cols)
      throw IoError("out-of-range coordinate in " + file.string());
    m(r, c) = std::stod(value);
  }
  if (in >> value)
    throw IoError("trailing data in matrix file: " + file.string());
  return m;
}

}  // namespace

void save_model(const FittedModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_matrix_tsv(model.e_theta, dir / "theta.tsv");
  save_matrix_tsv(model.e_beta, dir / "beta.tsv");

  nlohmann::json j;
  j["n_users"] = model.n_users();
  j["n_items"] = model.n_items();
  j["k"] = model.k();
  j["hyper"] = hyper_to_json(model.hyper);
  j["iterations"] = model.meta.iterations;
  j["seed"] = model.meta.seed;
  j["converged"] = model.meta.converged;
  if (std::isfinite(model.meta.final_valid_loglik))
    j["final_valid_loglik"] = model.meta.final_valid_loglik;

  auto out = open_output(dir / "model.json");
  out << j.dump(2) << '\n';
}

FittedModel load_model(const std::filesystem::path& dir) {
  auto in = open_input(dir / "model.json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad model.json: " + std::string(e.what()));
  }

  FittedModel model;
  model.hyper = hyper_from_json(j.at("hyper"));
  const auto n_users = j.at("n_users").get<std::uint32_t>();
  const auto n_items = j.at("n_items").get<std::uint32_t>();
  const auto k = j.at("k").get<std::uint32_t>();
  if (k != model.hyper.k)
    throw IoError("model.json k disagrees with hyperparameters");
  model.meta.iterations = j.value("iterations", std::uint32_t{0});
  model.meta.seed = j.value("seed", std::uint64_t{0});
  model.meta.converged = j.value("converged", false);
  model.meta.final_valid_loglik =
      j.value("final_valid_loglik", std::numeric_limits<double>::quiet_NaN());

  model.e_theta = load_matrix_tsv(dir / "theta.tsv", n_users, k);
  model.e_beta = load_matrix_tsv(dir / "beta.tsv", n_items, k);
  return model;
}

}  // namespace pfrec
