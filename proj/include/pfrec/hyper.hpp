#ifndef PFREC_HYPER_HPP
#define PFREC_HYPER_HPP

#include <cstdint>
#include <string>

namespace pfrec {

// hpf: per-user activity and per-item popularity Gammas set the weight rates.
// bpf: all weight rates fixed to shared hyperparameters, no hierarchy.
enum class Variant { hpf, bpf };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

// The six Gamma shape/rate controls plus the latent dimension. Defaults give
// exponentially shaped priors (shapes 0.3) with unit prior means.
struct Hyperparameters {
  double a = 0.3;        // user weight shape
  double a_prime = 0.3;  // user activity shape
  double b_prime = 1.0;  // user activity prior mean
  double c = 0.3;        // item weight shape
  double c_prime = 0.3;  // item popularity shape
  double d_prime = 1.0;  // item popularity prior mean
  std::uint32_t k = 100;
  Variant variant = Variant::hpf;
  double bpf_user_rate = 1.0;  // fixed user weight rate (bpf only)
  double bpf_item_rate = 1.0;  // fixed item weight rate (bpf only)

  void validate() const;  // throws ArgumentError on non-positive controls

  bool operator==(const Hyperparameters&) const = default;
};

}  // namespace pfrec

#endif
