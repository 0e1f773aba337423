#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfrec/config.hpp"

namespace pfrec {

// Each command reads/writes inside config.output and returns the process
// exit code (0 ok, 2 not converged; input and numerical errors are thrown
// and mapped to 3/4 by the entry point).
int cmd_prepare(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_recommend(const RunConfig& config,
                  const std::vector<std::string>& users);
int cmd_eval(const RunConfig& config);
int cmd_ppc(const RunConfig& config);
int cmd_simulate(const RunConfig& config, std::uint32_t n_users,
                 std::uint32_t n_items);

}  // namespace pfrec
