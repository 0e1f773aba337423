#pragma once

#include <nlohmann/json.hpp>

#include "pfrec/errors.hpp"
#include "pfrec/hyper.hpp"

namespace pfrec {

inline nlohmann::json hyper_to_json(const Hyperparameters& h) {
  nlohmann::json j;
  j["a"] = h.a;
  j["a_prime"] = h.a_prime;
  j["b_prime"] = h.b_prime;
  j["c"] = h.c;
  j["c_prime"] = h.c_prime;
  j["d_prime"] = h.d_prime;
  j["k"] = h.k;
  j["variant"] = to_string(h.variant);
  if (h.variant == Variant::bpf) {
    j["bpf_user_rate"] = h.bpf_user_rate;
    j["bpf_item_rate"] = h.bpf_item_rate;
  }
  return j;
}

inline Hyperparameters hyper_from_json(const nlohmann::json& j) {
  Hyperparameters h;
  auto number = [&](const char* key, double& dst) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number())
      throw ArgumentError(std::string("hyperparameter '") + key +
                          "' must be a number");
    dst = j.at(key).get<double>();
  };
  number("a", h.a);
  number("a_prime", h.a_prime);
  number("b_prime", h.b_prime);
  number("c", h.c);
  number("c_prime", h.c_prime);
  number("d_prime", h.d_prime);
  number("bpf_user_rate", h.bpf_user_rate);
  number("bpf_item_rate", h.bpf_item_rate);
  if (j.contains("k")) {
    if (!j.at("k").is_number_unsigned() || j.at("k").get<std::uint64_t>() < 1)
      throw ArgumentError("hyperparameter 'k' must be a positive integer");
    h.k = j.at("k").get<std::uint32_t>();
  }
  if (j.contains("variant"))
    h.variant = variant_from_string(j.at("variant").get<std::string>());
  h.validate();
  return h;
}

}  // namespace pfrec
