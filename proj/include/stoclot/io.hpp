#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stoclot/certifier.hpp"
#include "stoclot/determinize.hpp"
#include "stoclot/error.hpp"
#include "stoclot/expected.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/lottery.hpp"
#include "stoclot/verify.hpp"

namespace stoclot::io {

using json = nlohmann::json;

namespace detail {

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw input_error(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw input_error(where + ": bad field '" + key + "': " + e.what());
  }
}

/// Non-finite doubles become null (JSON has no inf/nan).
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json ids(const Instance& instance, const SolutionSet& s) {
  json out = json::array();
  for (auto f : s.open) out.push_back(instance.facility_id(f));
  return out;
}

inline SolutionSet set_from_ids(const Instance& instance, const json& arr, const std::string& where) {
  if (!arr.is_array()) throw input_error(where + ": expected an array of facility ids");
  std::vector<FacilityIndex> open;
  for (const auto& id : arr) {
    if (!id.is_string()) throw input_error(where + ": facility ids must be strings");
    open.push_back(instance.facility_index(id.get<std::string>()));
  }
  return SolutionSet(std::move(open));
}

}  // namespace detail

inline json parse(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw input_error(where + ": invalid JSON: " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw input_error("failed writing '" + path + "'");
}

/// Doubles are printed in shortest round-trip form, so parsing the output restores the
/// exact value.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Instance ------------------------------------------------------------------------

/// Matrix metrics name every point with a label; "facilities" and "clients" list labels.
/// Euclidean metrics give coordinates per facility and per client; "facilities" and
/// "clients" then hold the ids in the same order (optional). An SCC Euclidean instance
/// may omit the client coordinates.
inline Instance instance_from_json(const json& j) {
  const std::string where = "instance";
  const int k = detail::get<int>(j, "k", where);
  const bool scc = j.value("scc", false);
  const json& m = j.contains("metric") ? j.at("metric") : throw input_error("instance: missing field 'metric'");
  const auto type = detail::get<std::string>(m, "type", "instance.metric");
  if (type == "matrix") {
    const auto labels = detail::get<std::vector<std::string>>(m, "labels", "instance.metric");
    const auto rows = detail::get<std::vector<std::vector<double>>>(m, "d", "instance.metric");
    const std::size_t n = labels.size();
    if (rows.size() != n) throw input_error("instance.metric: d must have one row per label");
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != n) throw input_error("instance.metric: d must be square");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    auto index_of = [&](const std::string& id) {
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == id) return i;
      throw input_error("instance: unknown label '" + id + "'");
    };
    const auto fids = j.contains("facilities") ? detail::get<std::vector<std::string>>(j, "facilities", where) : labels;
    const auto cids = j.contains("clients") ? detail::get<std::vector<std::string>>(j, "clients", where) : fids;
    std::vector<std::size_t> fp, cp;
    for (const auto& id : fids) fp.push_back(index_of(id));
    for (const auto& id : cids) cp.push_back(index_of(id));
    return Instance(Metric::dense(n, std::move(flat)), fp, cp, k, scc, fids, cids);
  }
  if (type == "euclidean") {
    auto fpts = detail::get<std::vector<std::vector<double>>>(m, "facilities", "instance.metric");
    std::vector<std::vector<double>> cpts;
    if (m.contains("clients")) cpts = detail::get<std::vector<std::vector<double>>>(m, "clients", "instance.metric");
    std::vector<std::string> fids, cids;
    if (j.contains("facilities")) fids = detail::get<std::vector<std::string>>(j, "facilities", where);
    if (j.contains("clients")) cids = detail::get<std::vector<std::string>>(j, "clients", where);
    if (scc) {
      if (!cpts.empty() && cpts != fpts) throw input_error("instance: SCC needs identical facility and client points");
      std::vector<std::size_t> idx(fpts.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      if (cids.empty()) cids = fids;
      return Instance(Metric::euclidean(std::move(fpts)), idx, idx, k, true, fids, cids);
    }
    std::vector<std::size_t> fp, cp;
    for (std::size_t i = 0; i < fpts.size(); ++i) fp.push_back(i);
    for (std::size_t i = 0; i < cpts.size(); ++i) cp.push_back(fpts.size() + i);
    fpts.insert(fpts.end(), cpts.begin(), cpts.end());
    return Instance(Metric::euclidean(std::move(fpts)), fp, cp, k, false, fids, cids);
  }
  throw input_error("instance.metric: unknown type '" + type + "'");
}

inline json instance_to_json(const Instance& instance) {
  json j;
  j["k"] = instance.k();
  j["scc"] = instance.scc();
  const Metric& metric = instance.metric();
  if (metric.is_euclidean()) {
    json f = json::array(), c = json::array();
    for (auto p : instance.facility_points()) f.push_back(metric.points()[p]);
    for (auto p : instance.client_points()) c.push_back(metric.points()[p]);
    j["metric"] = {{"type", "euclidean"}, {"facilities", f}, {"clients", c}};
    j["facilities"] = instance.facility_ids();
    j["clients"] = instance.client_ids();
    return j;
  }
  const std::size_t n = metric.size();
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = "x" + std::to_string(i);
  std::vector<char> named(n, 0);
  for (std::size_t f = 0; f < instance.num_facilities(); ++f) {
    const auto p = instance.facility_points()[f];
    if (!named[p]) labels[p] = instance.facility_id(f), named[p] = 1;
  }
  for (std::size_t c = 0; c < instance.num_clients(); ++c) {
    const auto p = instance.client_points()[c];
    if (!named[p]) labels[p] = instance.client_id(c), named[p] = 1;
  }
  json d = json::array();
  for (std::size_t a = 0; a < n; ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < n; ++b) row.push_back(metric(a, b));
    d.push_back(row);
  }
  j["metric"] = {{"type", "matrix"}, {"labels", labels}, {"d", d}};
  json f = json::array(), c = json::array();
  for (auto p : instance.facility_points()) f.push_back(labels[p]);
  for (auto p : instance.client_points()) c.push_back(labels[p]);
  j["facilities"] = f;
  j["clients"] = c;
  return j;
}

// Demands -------------------------------------------------------------------------

struct Demands {
  std::optional<DemandChance> chance;
  std::optional<DemandExpected> expected;
};

inline Demands demands_from_json(const Instance& instance, const json& j) {
  Demands out;
  const std::size_t nc = instance.num_clients();
  if (j.contains("chance")) {
    DemandChance d{std::vector<double>(nc, -1.0), std::vector<double>(nc, -1.0)};
    std::vector<char> seen(nc, 0);
    for (const auto& e : j.at("chance")) {
      const auto c = instance.client_index(detail::get<std::string>(e, "client", "demand.chance"));
      if (seen[c]) throw input_error("demand.chance: client '" + instance.client_id(c) + "' listed twice");
      seen[c] = 1;
      d.p[c] = detail::get<double>(e, "p", "demand.chance");
      d.r[c] = detail::get<double>(e, "r", "demand.chance");
    }
    for (std::size_t c = 0; c < nc; ++c)
      if (!seen[c]) throw input_error("demand.chance: client '" + instance.client_id(c) + "' missing");
    d.validate(instance);
    out.chance = std::move(d);
  }
  if (j.contains("expected")) {
    DemandExpected d{std::vector<double>(nc, -1.0)};
    std::vector<char> seen(nc, 0);
    for (const auto& e : j.at("expected")) {
      const auto c = instance.client_index(detail::get<std::string>(e, "client", "demand.expected"));
      if (seen[c]) throw input_error("demand.expected: client '" + instance.client_id(c) + "' listed twice");
      seen[c] = 1;
      d.t[c] = detail::get<double>(e, "t", "demand.expected");
    }
    for (std::size_t c = 0; c < nc; ++c)
      if (!seen[c]) throw input_error("demand.expected: client '" + instance.client_id(c) + "' missing");
    d.validate(instance);
    out.expected = std::move(d);
  }
  return out;
}

inline json demands_to_json(const Instance& instance, const Demands& d) {
  json j = json::object();
  if (d.chance) {
    json arr = json::array();
    for (std::size_t c = 0; c < instance.num_clients(); ++c)
      arr.push_back({{"client", instance.client_id(c)}, {"p", d.chance->p[c]}, {"r", d.chance->r[c]}});
    j["chance"] = arr;
  }
  if (d.expected) {
    json arr = json::array();
    for (std::size_t c = 0; c < instance.num_clients(); ++c)
      arr.push_back({{"client", instance.client_id(c)}, {"t", d.expected->t[c]}});
    j["expected"] = arr;
  }
  return j;
}

// Results -------------------------------------------------------------------------

inline json solution_to_json(const Instance& instance, const SolutionSet& s) {
  json j;
  j["open"] = detail::ids(instance, s);
  json d = json::array();
  for (double v : service_distances(instance, s)) d.push_back(detail::number(v));
  j["distances"] = d;
  return j;
}

inline json lottery_to_json(const Instance& instance, const ExplicitLottery& lottery) {
  json atoms = json::array();
  for (const auto& a : lottery.atoms) atoms.push_back({{"prob", a.prob}, {"open", detail::ids(instance, a.set)}});
  json exp = json::array();
  for (double v : lottery.expectations(instance)) exp.push_back(detail::number(v));
  return {{"atoms", atoms}, {"expected_distance", exp}};
}

inline ExplicitLottery lottery_from_json(const Instance& instance, const json& j) {
  ExplicitLottery out;
  if (!j.contains("atoms") || !j.at("atoms").is_array()) throw input_error("lottery: missing 'atoms' array");
  for (const auto& a : j.at("atoms"))
    out.atoms.push_back({detail::set_from_ids(instance, a.at("open"), "lottery"), detail::get<double>(a, "prob", "lottery")});
  out.validate(instance);
  return out;
}

inline json determinization_to_json(const Instance& instance, const Determinization& d) {
  json j;
  j["open"] = detail::ids(instance, d.set);
  j["alpha_declared"] = d.alpha_declared;
  j["beta_declared"] = d.beta_declared;
  j["alpha_achieved"] = d.alpha_achieved;
  j["beta_achieved"] = detail::number(d.beta_achieved);
  j["attempts"] = d.attempts;
  json w = json::array();
  for (auto c : d.infeasibility_witness) w.push_back(instance.client_id(c));
  j["infeasibility_witness"] = w;
  return j;
}

inline json report_to_json(const Instance& instance, const VerificationReport& r) {
  json clients = json::array();
  for (std::size_t c = 0; c < r.clients.size(); ++c) {
    const auto& x = r.clients[c];
    clients.push_back({{"client", instance.client_id(c)},
                       {"coverage", detail::number(x.coverage)},
                       {"coverage_radius", x.coverage_radius},
                       {"mean", detail::number(x.mean)},
                       {"mean_radius", x.mean_radius},
                       {"max_distance", detail::number(x.max_distance)},
                       {"pass", x.pass}});
  }
  return {{"samples", r.samples}, {"seed", r.seed},   {"max_open_observed", r.max_open_observed},
          {"delta", r.delta},     {"slack", r.slack}, {"clients", clients},
          {"pass", r.pass}};
}

inline QDistribution qdist_from_json(const json& j) {
  QDistribution q;
  if (!j.contains("support") || !j.at("support").is_array()) throw input_error("qdist: missing 'support' array");
  for (const auto& p : j.at("support"))
    q.support.push_back({detail::get<double>(p, "qf", "qdist"), detail::get<double>(p, "qp", "qdist"),
                         detail::get<double>(p, "prob", "qdist")});
  q.validate();
  return q;
}

inline json qdist_to_json(const QDistribution& q) {
  json arr = json::array();
  for (const auto& p : q.support) arr.push_back({{"qf", p.qf}, {"qp", p.qp}, {"prob", p.prob}});
  return {{"support", arr}};
}

inline json certificate_to_json(const BoundCertificate& c) {
  const auto& o = c.options;
  json opts = {{"L", o.L},
               {"M", o.M},
               {"eps_grid", o.eps_grid},
               {"qdist", qdist_to_json(o.qdist)},
               {"sweep_p", o.sweep_p},
               {"pareto", o.pareto},
               {"branch_and_bound", o.branch_and_bound}};
  if (o.sweep_p) opts["p_range"] = {o.p_lo, o.p_hi};
  return {{"mode", "partial"},
          {"options", opts},
          {"max_value", c.max_value},
          {"bound", c.bound},
          {"best_p", detail::number(c.best_p)},
          {"peak_tuples", c.peak_tuples}};
}

inline json certificate_to_json(const SccCertificate& c) {
  return {{"mode", "scc"},          {"q", c.q},
          {"grid", c.grid},         {"t_max", c.t_max},
          {"bound", c.bound},       {"argmax_s", c.argmax_s},
          {"argmax_t", c.argmax_t}};
}

}  // namespace stoclot::io
