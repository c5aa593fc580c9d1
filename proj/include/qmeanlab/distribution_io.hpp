#pragma once

// JSON distribution specs:
//   {"d": int, "omega": [string...] (optional), "prob": [number...], "values": [[number...]...]}

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qmeanlab/core.hpp"
#include "qmeanlab/probspace.hpp"

namespace qmeanlab {

inline constexpr double kSpecProbSumTolerance = 1e-9;

inline RandomVariable distribution_from_json(const nlohmann::json& doc) {
  using nlohmann::json;
  if (!doc.is_object()) throw InvalidArgument("distribution spec: document must be a JSON object");
  if (!doc.contains("d") || !doc["d"].is_number_integer() || doc["d"].get<long long>() < 1)
    throw InvalidArgument("distribution spec: field \"d\" must be a positive integer");
  const auto d = static_cast<std::size_t>(doc["d"].get<long long>());

  if (!doc.contains("prob") || !doc["prob"].is_array() || doc["prob"].empty())
    throw InvalidArgument("distribution spec: field \"prob\" must be a nonempty array of numbers");
  std::vector<double> prob;
  for (std::size_t k = 0; k < doc["prob"].size(); ++k) {
    const json& p = doc["prob"][k];
    if (!p.is_number()) throw InvalidArgument("distribution spec: field \"prob\" entry " + std::to_string(k) + " is not a number");
    const double v = p.get<double>();
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidArgument("distribution spec: field \"prob\" entry " + std::to_string(k) + " outside [0,1]");
    prob.push_back(v);
  }
  double total = 0.0;
  for (double p : prob) total += p;
  if (std::abs(total - 1.0) > kSpecProbSumTolerance)
    throw InvalidArgument("distribution spec: field \"prob\" sums to " + format_g17(total) + ", expected 1 within 1e-9");
  if (total != 1.0)
    for (double& p : prob) p /= total;

  if (!doc.contains("values") || !doc["values"].is_array())
    throw InvalidArgument("distribution spec: field \"values\" must be an array of rows");
  const json& vals = doc["values"];
  if (vals.size() != prob.size())
    throw InvalidArgument("distribution spec: field \"values\" has " + std::to_string(vals.size()) +
                          " rows but \"prob\" has " + std::to_string(prob.size()) + " entries");
  std::vector<Vec> rows;
  rows.reserve(vals.size());
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const json& row = vals[k];
    if (!row.is_array())
      throw InvalidArgument("distribution spec: field \"values\" row " + std::to_string(k) + " is not an array");
    if (row.size() != d)
      throw InvalidArgument("distribution spec: field \"values\" row " + std::to_string(k) + " has length " +
                            std::to_string(row.size()) + ", expected d = " + std::to_string(d));
    Vec r;
    for (const json& x : row) {
      if (!x.is_number())
        throw InvalidArgument("distribution spec: field \"values\" row " + std::to_string(k) + " has a non-numeric entry");
      r.push_back(x.get<double>());
    }
    rows.push_back(std::move(r));
  }

  std::vector<std::string> labels;
  if (doc.contains("omega")) {
    const json& om = doc["omega"];
    if (!om.is_array() || om.size() != prob.size())
      throw InvalidArgument("distribution spec: field \"omega\" must be an array with one label per outcome");
    for (std::size_t k = 0; k < om.size(); ++k) {
      if (!om[k].is_string())
        throw InvalidArgument("distribution spec: field \"omega\" entry " + std::to_string(k) + " is not a string");
      labels.push_back(om[k].get<std::string>());
    }
    std::vector<std::string> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InvalidArgument("distribution spec: field \"omega\" has duplicate labels");
  }
  return RandomVariable(std::move(labels), std::move(prob), rows);
}

inline RandomVariable parse_distribution_spec(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("distribution spec: malformed JSON: ") + e.what());
  }
  return distribution_from_json(doc);
}

/// Numbers are written with 17 significant digits so parse(serialize(rv)) is bit-exact.
inline std::string serialize_distribution_spec(const RandomVariable& rv) {
  std::string out = "{\n  \"d\": " + std::to_string(rv.dim()) + ",\n  \"omega\": [";
  for (std::size_t k = 0; k < rv.size(); ++k) {
    if (k) out += ", ";
    out += nlohmann::json(rv.labels()[k]).dump();
  }
  out += "],\n  \"prob\": [";
  for (std::size_t k = 0; k < rv.size(); ++k) {
    if (k) out += ", ";
    out += format_g17(rv.prob(k));
  }
  out += "],\n  \"values\": [";
  for (std::size_t k = 0; k < rv.size(); ++k) {
    out += k ? ",\n    [" : "\n    [";
    const auto x = rv.value(k);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j) out += ", ";
      out += format_g17(x[j]);
    }
    out += "]";
  }
  out += "\n  ]\n}\n";
  return out;
}

}  // namespace qmeanlab
