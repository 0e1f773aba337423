#include "pfrec/hyper.hpp"

#include "pfrec/errors.hpp"

namespace pfrec {

std::string to_string(Variant v) {
  return v == Variant::hpf ? "hpf" : "bpf";
}

Variant variant_from_string(const std::string& s) {
  if (s == "hpf") return Variant::hpf;
  if (s == "bpf") return Variant::bpf;
  throw ArgumentError("unknown variant '" + s + "' (expected hpf or bpf)");
}

void Hyperparameters::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0))
      throw ArgumentError(std::string(name) + " must be positive");
  };
  positive(a, "a");
  positive(a_prime, "a_prime");
  positive(b_prime, "b_prime");
  positive(c, "c");
  positive(c_prime, "c_prime");
  positive(d_prime, "d_prime");
  if (variant == Variant::bpf) {
    positive(bpf_user_rate, "bpf_user_rate");
    positive(bpf_item_rate, "bpf_item_rate");
  }
  if (k < 1) throw ArgumentError("k must be at least 1");
}

}  // namespace pfrec
