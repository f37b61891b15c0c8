#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "mmq/game_model.hpp"

namespace mmq {

// A game document: the game itself plus the optional behavior model.
struct GameDocument {
  GameSpec spec;
  std::optional<SamplingModel> sampling;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw LoadError(key, "missing required field");
  return *it;
}

inline int require_positive_int(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw LoadError(key, "must be a positive integer");
  }
  return v.get<int>();
}

inline double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw LoadError(field, "expected a number");
  return v.get<double>();
}

inline const json& as_array(const json& v, std::size_t size, const std::string& field) {
  if (!v.is_array() || v.size() != size) throw LoadError(field, "shape mismatch");
  return v;
}

inline Vector read_vector(const json& v, int size, const std::string& field) {
  as_array(v, size, field);
  Vector out(size);
  for (int i = 0; i < size; ++i) out[i] = as_number(v[i], field);
  return out;
}

inline Matrix read_matrix(const json& v, int rows, int cols, const std::string& field) {
  as_array(v, rows, field);
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r) out.row(r) = read_vector(v[r], cols, field).transpose();
  return out;
}

inline json vector_json(const Eigen::Ref<const Vector>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

}  // namespace detail

/// Parses a game document. Rewards may be given per (s,a,b) or per
/// (s,a,b,s'); the latter are reduced to expected rewards with P.
inline GameDocument parse_game(const nlohmann::json& doc) {
  using detail::json;
  if (!doc.is_object()) throw LoadError("document", "top level must be an object");
  static const std::set<std::string> allowed = {"num_states", "num_actions_user", "num_actions_adv",
                                                "discount",   "transition",       "reward",
                                                "sampling"};
  for (const auto& item : doc.items()) {
    if (!allowed.count(item.key())) throw LoadError(item.key(), "unknown top-level key");
  }

  GameDocument out;
  GameSpec& spec = out.spec;
  Dims& dims = spec.dims;
  dims.states = detail::require_positive_int(doc, "num_states");
  dims.actions_user = detail::require_positive_int(doc, "num_actions_user");
  dims.actions_adv = detail::require_positive_int(doc, "num_actions_adv");
  spec.discount = detail::as_number(detail::require(doc, "discount"), "discount");
  if (!(spec.discount >= 0.0 && spec.discount < 1.0)) {
    throw LoadError("discount", "must lie in [0, 1)");
  }

  const json& tr = detail::require(doc, "transition");
  const json& rw = detail::require(doc, "reward");
  spec.transition.resize(dims.n(), dims.states);
  spec.reward.resize(dims.n());
  const std::string tshape = "transition shape";
  detail::as_array(tr, dims.actions_user, tshape);
  detail::as_array(rw, dims.actions_user, "reward shape");
  for (int a = 0; a < dims.actions_user; ++a) {
    detail::as_array(tr[a], dims.actions_adv, tshape);
    detail::as_array(rw[a], dims.actions_adv, "reward shape");
    for (int b = 0; b < dims.actions_adv; ++b) {
      const json& tab = detail::as_array(tr[a][b], dims.states, tshape);
      const json& rab = detail::as_array(rw[a][b], dims.states, "reward shape");
      for (int s = 0; s < dims.states; ++s) {
        const int i = flat_index(a, b, s, dims);
        spec.transition.row(i) = detail::read_vector(tab[s], dims.states, tshape).transpose();
        if (rab[s].is_array()) {
          const Vector per_next = detail::read_vector(rab[s], dims.states, "reward shape");
          spec.reward[i] = spec.transition.row(i).dot(per_next);
        } else {
          spec.reward[i] = detail::as_number(rab[s], "reward");
        }
      }
    }
  }

  const ValidationReport report = validate_game(spec);
  if (!report.ok()) {
    const Violation& v = report.violations.front();
    const std::string field = v.rule == "reward bound" ? "reward" : "transition";
    throw LoadError(field, v.message);
  }

  if (auto it = doc.find("sampling"); it != doc.end()) {
    const json& smp = *it;
    if (!smp.is_object()) throw LoadError("sampling", "must be an object");
    for (const auto& item : smp.items()) {
      if (item.key() != "p" && item.key() != "beta" && item.key() != "phi") {
        throw LoadError("sampling." + item.key(), "unknown key");
      }
    }
    SamplingModel m;
    m.state_dist = detail::read_vector(detail::require(smp, "p"), dims.states, "sampling.p");
    m.user_policy = detail::read_matrix(detail::require(smp, "beta"), dims.states,
                                        dims.actions_user, "sampling.beta");
    m.adv_policy = detail::read_matrix(detail::require(smp, "phi"), dims.states, dims.actions_adv,
                                       "sampling.phi");
    try {
      validate_sampling(m, dims);
    } catch (const std::exception& e) {
      throw LoadError("sampling", e.what());
    }
    out.sampling = std::move(m);
  }
  return out;
}

inline nlohmann::json game_to_json(const GameSpec& spec,
                                   const std::optional<SamplingModel>& sampling = std::nullopt) {
  using detail::json;
  const Dims& d = spec.dims;
  json doc;
  doc["num_states"] = d.states;
  doc["num_actions_user"] = d.actions_user;
  doc["num_actions_adv"] = d.actions_adv;
  doc["discount"] = spec.discount;
  json tr = json::array();
  json rw = json::array();
  for (int a = 0; a < d.actions_user; ++a) {
    json ta = json::array();
    json ra = json::array();
    for (int b = 0; b < d.actions_adv; ++b) {
      json tb = json::array();
      json rb = json::array();
      for (int s = 0; s < d.states; ++s) {
        const int i = flat_index(a, b, s, d);
        tb.push_back(detail::vector_json(spec.transition.row(i).transpose()));
        rb.push_back(spec.reward[i]);
      }
      ta.push_back(std::move(tb));
      ra.push_back(std::move(rb));
    }
    tr.push_back(std::move(ta));
    rw.push_back(std::move(ra));
  }
  doc["transition"] = std::move(tr);
  doc["reward"] = std::move(rw);
  if (sampling) {
    doc["sampling"] = {{"p", detail::vector_json(sampling->state_dist)},
                       {"beta", detail::matrix_json(sampling->user_policy)},
                       {"phi", detail::matrix_json(sampling->adv_policy)}};
  }
  return doc;
}

inline GameDocument load_game_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("document", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError("document", e.what());
  }
  return parse_game(doc);
}

inline GameSpec load_game(const std::filesystem::path& path) {
  return load_game_document(path).spec;
}

inline void save_game(const GameSpec& spec, const std::filesystem::path& path,
                      const std::optional<SamplingModel>& sampling = std::nullopt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << game_to_json(spec, sampling).dump(2) << '\n';
}

}  // namespace mmq
