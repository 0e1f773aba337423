#ifndef PFREC_CONFIG_HPP
#define PFREC_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "pfrec/dataset.hpp"
#include "pfrec/hyper.hpp"
#include "pfrec/inference.hpp"
#include "pfrec/ppc.hpp"

namespace pfrec {

// One declarative run description shared by every command. Defaults follow
// the reference experimental setup: shapes 0.3, unit prior means, k=100,
// 20%/1% test/validation split, 20 recommendations, rel_tol=1e-6.
struct RunConfig {
  std::string input;      // ratings file (prepare) or is unused
  std::string output = "out";  // working directory shared by the commands
  InputFormat input_format = InputFormat::tsv;
  Hyperparameters hyper;  // includes variant and k
  double test_frac = 0.20;
  double valid_frac = 0.01;
  FitOptions fit;         // seed/threads are carried top-level below
  std::optional<std::uint64_t> binarize;
  std::uint32_t m = 20;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = all available cores; 1 = sequential reference
  PpcOptions ppc;
  bool timestamps_off = false;

  bool operator==(const RunConfig&) const;
};

// Canonical JSON form; load rejects unknown keys so typos fail loudly.
std::string config_json(const RunConfig& config);
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& file);
void save_config(const RunConfig& config, const std::filesystem::path& file);

}  // namespace pfrec

#endif
