#include "preg/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace preg::report {

json to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const linalg::Subspace& s) {
  return {{"ambient", s.ambient()}, {"dim", s.dim()}, {"basis", to_json(s.basis())}};
}

json to_json(const solvers::SolveReport& r) {
  json hist = json::array();
  for (const auto& rec : r.history) {
    hist.push_back({{"k", rec.k},
                    {"x", to_json(rec.x)},
                    {"residual", rec.residual},
                    {"step_norm", rec.step_norm},
                    {"dist_to_root", rec.dist_to_root},
                    {"cond", rec.cond}});
  }
  json j{{"status", solvers::to_string(r.status)},
         {"iterations", static_cast<int>(r.history.size()) - 1},
         {"final_x", to_json(r.final_x)},
         {"fitted_c", r.fitted_c},
         {"history", std::move(hist)}};
  if (r.root_known) j["root"] = to_json(r.root);
  return j;
}

json to_json(const pfactor::Decomposition& d) {
  json bands = json::array();
  for (int k = 1; k <= d.p(); ++k) {
    bands.push_back({{"k", k},
                     {"dim", d.band(k).dim()},
                     {"basis", to_json(d.band(k).basis())},
                     {"projector", to_json(d.band_projector(k))}});
  }
  return {{"p", d.p()}, {"m", d.m()}, {"n", d.n()}, {"bands", std::move(bands)}};
}

json to_json(const pfactor::FactorOperator& f) {
  json terms = json::array();
  for (const auto& t : f.terms) terms.push_back(to_json(t));
  return {{"h", to_json(f.h)},
          {"psi", to_json(f.psi)},
          {"rank", f.rank},
          {"surjective", f.surjective},
          {"terms", std::move(terms)}};
}

json to_json(const pfactor::RegularityCheck& r) {
  json j{{"regular", r.regular}};
  if (r.crosscheck_ran) {
    j["crosscheck_regular"] = r.crosscheck_regular;
    j["crosscheck_agrees"] = r.agrees;
  }
  return j;
}

json to_json(const pfactor::NewtonChain& c) {
  json pbar = json::array();
  for (const auto& p : c.pbar()) pbar.push_back(to_json(p));
  json comb = json::array();
  for (const auto& p : c.combined()) comb.push_back(to_json(p));
  return {{"p", c.p()},
          {"h", to_json(c.h())},
          {"pbar", std::move(pbar)},
          {"combined", std::move(comb)},
          {"factor_matrix", to_json(c.factor_matrix())}};
}

json to_json(const pfactor::StrongRegularityEstimate& e) {
  const char* outcome = e.outcome == pfactor::StrongRegularityEstimate::Outcome::Finite
                            ? "finite"
                            : e.outcome == pfactor::StrongRegularityEstimate::Outcome::Unbounded
                                  ? "unbounded"
                                  : "empty-band";
  return {{"outcome", outcome},
          {"sup_inverse_norm", e.sup_inverse_norm},
          {"accepted", e.accepted},
          {"budget", e.budget}};
}

json to_json(const optimality::LagrangeCertificate& c) {
  json j{{"h", to_json(c.h)},
         {"lambda", to_json(c.lambda)},
         {"first_order_residual", c.first_order_residual},
         {"necessary", c.necessary},
         {"hp_member", c.hp_member},
         {"regular_along_h", c.regular_along_h}};
  if (c.second_order_ran) {
    j["v"] = c.v;
    j["v_normalized"] = c.v_normalized;
    j["sufficient_at_h"] = c.sufficient_at_h;
  }
  return j;
}

json to_json(const optimality::CertifyReport& r) {
  json certs = json::array();
  for (const auto& c : r.certificates) certs.push_back(to_json(c));
  return {{"verdict", optimality::to_string(r.verdict)},
          {"sampled", r.sampled},
          {"alpha_estimate", r.alpha_estimate},
          {"directions", static_cast<int>(r.certificates.size())},
          {"certificates", std::move(certs)}};
}

json to_json(const conlag::DirectionInfo& d) {
  return {{"active", d.point.active},
          {"weakly_active", d.point.weakly_active},
          {"strongly_active", d.point.strongly_active},
          {"s", d.s},
          {"degenerate", d.degenerate},
          {"h", to_json(d.h)}};
}

json to_json(const conlag::LemmaCertificate& c) {
  return {{"cqc", c.cqc},
          {"cone_positive", c.cone_positive},
          {"cone_min_ratio", c.cone_min_ratio},
          {"cone_samples", c.cone_samples},
          {"phi_prime_nonsingular", c.phi_prime_nonsingular},
          {"phi_prime", to_json(c.phi_prime)},
          {"V", to_json(c.V)},
          {"Q", to_json(c.Q)},
          {"Dn", to_json(c.Dn)}};
}

json to_json(const tangent::ConeDescription& c) {
  json dirs = json::array();
  json resid = json::array();
  for (const auto& d : c.directions) {
    dirs.push_back(to_json(d.h));
    resid.push_back(d.membership_residual);
  }
  return {{"p", c.p},
          {"count", static_cast<int>(c.directions.size())},
          {"directions", std::move(dirs)},
          {"membership_residuals", std::move(resid)}};
}

json to_json(const tangent::TraceResult& t) {
  json samples = json::array();
  for (const auto& s : t.samples) {
    samples.push_back({{"t", s.t},
                       {"residual", s.residual},
                       {"corrected", s.corrected},
                       {"correction_ratio", s.correction_ratio},
                       {"secant", to_json(s.secant)}});
  }
  return {{"h", to_json(t.h)}, {"confirmed", t.confirmed}, {"samples", std::move(samples)}};
}

json to_json(const tangent::DistanceFit& f) {
  json per = json::array();
  for (const auto& r : f.per_radius) {
    per.push_back({{"radius", r.radius},
                   {"delta1", r.delta1},
                   {"delta2", r.delta2},
                   {"samples", r.samples},
                   {"dropped", r.dropped}});
  }
  return {{"delta1", f.delta1},
          {"delta2", f.delta2},
          {"stable", f.stable},
          {"dropped", f.dropped},
          {"per_radius", std::move(per)}};
}

// ---------------------------------------------------------------------------
// serialization

namespace {

void escape_string(const std::string& s, std::string& out) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void write_number(double v, std::string& out) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void write_json(const json& j, std::string& out, int indent, int depth) {
  auto pad = [&](int d) { out.append(static_cast<std::size_t>(d) * indent, ' '); };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        pad(depth + 1);
        escape_string(it.key(), out);
        out += ": ";
        write_json(it.value(), out, indent, depth + 1);
        if (i + 1 < j.size()) out += ',';
        out += '\n';
      }
      pad(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // arrays of scalars inline, arrays of containers one per line
      bool nested = false;
      for (const auto& el : j)
        if (el.is_structured()) nested = true;
      if (!nested) {
        out += '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
          write_json(j[i], out, indent, depth);
          if (i + 1 < j.size()) out += ", ";
        }
        out += ']';
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        pad(depth + 1);
        write_json(j[i], out, indent, depth + 1);
        if (i + 1 < j.size()) out += ',';
        out += '\n';
      }
      pad(depth);
      out += ']';
      return;
    }
    case json::value_t::string:
      escape_string(j.get<std::string>(), out);
      return;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      return;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      return;
    case json::value_t::number_float:
      write_number(j.get<double>(), out);
      return;
    default:
      out += "null";
      return;
  }
}

}  // namespace

std::string serialize(const json& j, int indent) {
  std::string out;
  write_json(j, out, indent, 0);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// human renderings

namespace {

std::string scalar_to_text(const json& j, int precision = 10) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, j.get<double>());
    return buf;
  }
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return std::to_string(j.get<std::uint64_t>());
  if (j.is_null()) return "-";
  return "";
}

std::string csv_text(const json& j) { return scalar_to_text(j, 17); }

bool is_scalar_array(const json& j) {
  if (!j.is_array()) return false;
  for (const auto& el : j)
    if (el.is_structured()) return false;
  return true;
}

std::string inline_array(const json& j) {
  std::string s = "[";
  for (std::size_t i = 0; i < j.size(); ++i) {
    s += scalar_to_text(j[i]);
    if (i + 1 < j.size()) s += ", ";
  }
  return s + "]";
}

void render_block(const json& j, std::ostringstream& out, int depth) {
  std::string ind(static_cast<std::size_t>(depth) * 2, ' ');
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const json& v = it.value();
      if (v.is_object() || (v.is_array() && !is_scalar_array(v))) {
        out << ind << it.key() << ":\n";
        render_block(v, out, depth + 1);
      } else if (v.is_array()) {
        out << ind << it.key() << ": " << inline_array(v) << "\n";
      } else {
        out << ind << it.key() << ": " << scalar_to_text(v) << "\n";
      }
    }
    return;
  }
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      out << ind << "- [" << i << "]\n";
      render_block(j[i], out, depth + 1);
    }
    return;
  }
  out << ind << scalar_to_text(j) << "\n";
}

void collect_histories(const json& j, const std::string& path,
                       std::vector<std::pair<std::string, const json*>>& found) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "history" && it.value().is_array())
        found.emplace_back(path + "/history", &it.value());
      else
        collect_histories(it.value(), path + "/" + it.key(), found);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      collect_histories(j[i], path + "/" + std::to_string(i), found);
  }
}

void flatten_scalars(const json& j, const std::string& path, std::ostringstream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten_scalars(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      flatten_scalars(j[i], path + "[" + std::to_string(i) + "]", out);
  } else {
    out << path << "," << csv_text(j) << "\n";
  }
}

}  // namespace

std::string render_table(const json& report) {
  std::ostringstream out;
  render_block(report, out, 0);
  return out.str();
}

std::string render_csv(const json& report) {
  std::vector<std::pair<std::string, const json*>> hists;
  collect_histories(report, "", hists);
  std::ostringstream out;
  if (hists.empty()) {
    out << "key,value\n";
    flatten_scalars(report, "", out);
    return out.str();
  }
  for (const auto& [path, hist] : hists) {
    out << "# " << path << "\n";
    if (hist->empty()) continue;
    int dim = static_cast<int>((*hist)[0]["x"].size());
    out << "k";
    for (int d = 0; d < dim; ++d) out << ",x" << d + 1;
    out << ",residual,step_norm,dist_to_root,cond\n";
    for (const auto& rec : *hist) {
      out << csv_text(rec["k"]);
      for (int d = 0; d < dim; ++d) out << "," << csv_text(rec["x"][d]);
      out << "," << csv_text(rec["residual"]) << "," << csv_text(rec["step_norm"]) << ","
          << csv_text(rec["dist_to_root"]) << "," << csv_text(rec["cond"]) << "\n";
    }
  }
  return out.str();
}

}  // namespace preg::report
