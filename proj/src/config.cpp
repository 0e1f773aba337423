#include "pfrec/config.hpp"

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pfrec/errors.hpp"
#include "src/hyper_json.hpp"
#include "src/io_util.hpp"

namespace pfrec {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.contains(key))
      throw ArgumentError("unknown config key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ArgumentError(std::string("config key '") + key +
                        "' has the wrong type");
  }
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  return input == o.input && output == o.output &&
         input_format == o.input_format && hyper == o.hyper &&
         test_frac == o.test_frac && valid_frac == o.valid_frac &&
         fit == o.fit && binarize == o.binarize && m == o.m &&
         seed == o.seed && threads == o.threads && ppc == o.ppc &&
         timestamps_off == o.timestamps_off;
}

std::string config_json(const RunConfig& config) {
  json j;
  j["input"] = config.input;
  j["output"] = config.output;
  j["input_format"] = config.input_format == InputFormat::csv ? "csv" : "tsv";
  j["variant"] = to_string(config.hyper.variant);
  json hyper = hyper_to_json(config.hyper);
  hyper.erase("variant");
  // The fixed bpf rates are always present so the file round-trips whichever
  // variant a later override selects.
  hyper["bpf_user_rate"] = config.hyper.bpf_user_rate;
  hyper["bpf_item_rate"] = config.hyper.bpf_item_rate;
  j["hyper"] = hyper;
  j["split"] = {{"test_frac", config.test_frac},
                {"valid_frac", config.valid_frac}};
  j["fit"] = {{"max_iters", config.fit.max_iters},
              {"rel_tol", config.fit.rel_tol},
              {"check_every", config.fit.check_every},
              {"init_offset_scale", config.fit.init_offset_scale}};
  if (config.binarize)
    j["binarize"] = *config.binarize;
  else
    j["binarize"] = nullptr;
  j["m"] = config.m;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  j["ppc"] = {{"cell_budget", config.ppc.cell_budget},
              {"streaming", config.ppc.streaming},
              {"by_item", config.ppc.by_item},
              {"deciles", config.ppc.deciles}};
  j["timestamps_off"] = config.timestamps_off;
  return j.dump(2);
}

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");

  reject_unknown_keys(j,
                      {"input", "output", "input_format", "variant", "hyper",
                       "split", "fit", "binarize", "m", "seed", "threads",
                       "ppc", "timestamps_off"},
                      "config");

  RunConfig config;
  read(j, "input", config.input);
  read(j, "output", config.output);
  if (j.contains("input_format"))
    config.input_format =
        input_format_from_string(j.at("input_format").get<std::string>());

  if (j.contains("hyper")) {
    reject_unknown_keys(j.at("hyper"),
                        {"a", "a_prime", "b_prime", "c", "c_prime", "d_prime",
                         "k", "bpf_user_rate", "bpf_item_rate"},
                        "config.hyper");
    config.hyper = hyper_from_json(j.at("hyper"));
  }
  if (j.contains("variant"))
    config.hyper.variant =
        variant_from_string(j.at("variant").get<std::string>());

  if (j.contains("split")) {
    const json& s = j.at("split");
    reject_unknown_keys(s, {"test_frac", "valid_frac"}, "config.split");
    read(s, "test_frac", config.test_frac);
    read(s, "valid_frac", config.valid_frac);
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    reject_unknown_keys(
        f, {"max_iters", "rel_tol", "check_every", "init_offset_scale"},
        "config.fit");
    read(f, "max_iters", config.fit.max_iters);
    read(f, "rel_tol", config.fit.rel_tol);
    read(f, "check_every", config.fit.check_every);
    read(f, "init_offset_scale", config.fit.init_offset_scale);
  }
  if (j.contains("binarize") && !j.at("binarize").is_null()) {
    std::uint64_t t = 0;
    read(j, "binarize", t);
    config.binarize = t;
  }
  read(j, "m", config.m);
  read(j, "seed", config.seed);
  read(j, "threads", config.threads);
  if (j.contains("ppc")) {
    const json& p = j.at("ppc");
    reject_unknown_keys(p, {"cell_budget", "streaming", "by_item", "deciles"},
                        "config.ppc");
    read(p, "cell_budget", config.ppc.cell_budget);
    read(p, "streaming", config.ppc.streaming);
    read(p, "by_item", config.ppc.by_item);
    read(p, "deciles", config.ppc.deciles);
  }
  read(j, "timestamps_off", config.timestamps_off);
  return config;
}

RunConfig load_config(const std::filesystem::path& file) {
  auto in = open_input(file);
  std::ostringstream text;
  text << in.rdbuf();
  return config_from_json_text(text.str());
}

void save_config(const RunConfig& config, const std::filesystem::path& file) {
  auto out = open_output(file);
  out << config_json(config) << '\n';
}

}  // namespace pfrec
