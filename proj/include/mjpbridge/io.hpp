#ifndef MJPBRIDGE_IO_HPP
#define MJPBRIDGE_IO_HPP

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mjpbridge/models.hpp"

namespace mjpbridge {

using Json = nlohmann::json;

/// Throws ConfigError naming the first key of `obj` not in `allowed`.
inline void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(where + ": unknown key '" + key + "' (allowed: " + list + ")");
    }
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// {"species": [...], "reactions": [{"name", "reactants": {sp: n}, "products": {sp: n}, "rate"}],
///  "initial_state": {sp: n}}
inline BundledModel model_from_json(const Json& j, const std::string& where = "model") {
  reject_unknown_keys(j, {"name", "species", "reactions", "initial_state"}, where);
  try {
    const auto species = j.at("species").get<std::vector<std::string>>();
    const auto& reactions = j.at("reactions");
    if (species.empty() || !reactions.is_array() || reactions.empty())
      throw ConfigError(where + ": need at least one species and one reaction");
    const int u = static_cast<int>(species.size());
    const int v = static_cast<int>(reactions.size());
    auto index_of = [&](const std::string& s) {
      for (int k = 0; k < u; ++k)
        if (species[static_cast<std::size_t>(k)] == s) return k;
      throw ConfigError(where + ": unknown species '" + s + "'");
    };
    IntMatrix A = IntMatrix::Zero(v, u), B = IntMatrix::Zero(v, u);
    Vector rates(v);
    std::vector<std::string> names;
    for (int i = 0; i < v; ++i) {
      const auto& r = reactions[static_cast<std::size_t>(i)];
      const std::string rw = where + ".reactions[" + std::to_string(i) + "]";
      reject_unknown_keys(r, {"name", "reactants", "products", "rate"}, rw);
      names.push_back(r.value("name", "R" + std::to_string(i + 1)));
      const Json reactants = r.value("reactants", Json::object());
      const Json products = r.value("products", Json::object());
      for (const auto& [sp, n] : reactants.items()) A(i, index_of(sp)) = n.get<int>();
      for (const auto& [sp, n] : products.items()) B(i, index_of(sp)) = n.get<int>();
      rates[i] = r.at("rate").get<double>();
    }
    State x0(static_cast<std::size_t>(u), 0);
    if (j.contains("initial_state"))
      for (const auto& [sp, n] : j.at("initial_state").items()) x0[static_cast<std::size_t>(index_of(sp))] = n.get<long>();
    IntMatrix S = (B - A).transpose();
    return {j.value("name", std::string("custom")), ReactionNetwork(S, A, species, names), RateConstants(rates), x0};
  } catch (const Json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// A bundled model name (death, lv, sir) or a path to a model JSON file.
inline BundledModel load_model(const std::string& spec) {
  if (spec == "death" || spec == "lv" || spec == "lotka-volterra" || spec == "sir") return bundled_model(spec);
  return model_from_json(read_json_file(spec), spec);
}

inline Json model_to_json(const BundledModel& m) {
  const auto& net = m.network;
  Json reactions = Json::array();
  for (int i = 0; i < net.reaction_count(); ++i) {
    Json reactants = Json::object(), products = Json::object();
    for (int k = 0; k < net.species_count(); ++k) {
      const int a = net.reactant_orders()(i, k);
      const int b = a + net.stoichiometry()(k, i);
      const auto& name = net.species_names()[static_cast<std::size_t>(k)];
      if (a) reactants[name] = a;
      if (b) products[name] = b;
    }
    reactions.push_back({{"name", net.reaction_names()[static_cast<std::size_t>(i)]},
                         {"reactants", reactants},
                         {"products", products},
                         {"rate", m.rates[i]}});
  }
  Json x0 = Json::object();
  for (int k = 0; k < net.species_count(); ++k)
    x0[net.species_names()[static_cast<std::size_t>(k)]] = m.initial_state[static_cast<std::size_t>(k)];
  return {{"name", m.name}, {"species", net.species_names()}, {"reactions", reactions}, {"initial_state", x0}};
}

inline Dataset load_dataset(const std::string& spec) {
  if (spec == "eyam") return eyam_data();
  std::ifstream in(spec);
  if (!in) throw ConfigError("cannot open dataset '" + spec + "'");
  return Dataset::read_csv(in);
}

}  // namespace mjpbridge

#endif
