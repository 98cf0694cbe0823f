#include "entdepth/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "entdepth/csv.hpp"
#include "entdepth/error.hpp"
#include "entdepth/parallel.hpp"

namespace entdepth {

namespace {

constexpr double kConvexityTol = 1e-9;

}  // namespace

XiResult xi2_asym(std::span<const double> etas, std::span<const double> mean_jz) {
  if (etas.size() != mean_jz.size()) throw InvalidInput("xi2_asym: length mismatch");
  if (etas.empty()) throw InvalidInput("xi2_asym: no particles");
  XiResult r;
  double sum_eta = 0.0;
  double sum_eta_jz = 0.0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0 && etas[i] <= 1.0)) throw InvalidInput("xi2_asym: eta must lie in (0, 1]");
    if (!(std::abs(mean_jz[i]) <= 0.5)) throw InvalidInput("xi2_asym: <j_z> must lie in [-1/2, 1/2]");
    sum_eta += etas[i];
    r.sum_eta2 += etas[i] * etas[i];
    sum_eta_jz += etas[i] * mean_jz[i];
    r.sum_eta2_jz2 += etas[i] * etas[i] * mean_jz[i] * mean_jz[i];
  }
  if (sum_eta_jz == 0.0) throw InvalidInput("xi2_asym: zero mean spin, squeezing undefined");
  r.sum_eta_sq = sum_eta * sum_eta;
  r.sum_eta_jz_sq = sum_eta_jz * sum_eta_jz;
  r.xi2 = (r.sum_eta_sq / r.sum_eta2) * (r.sum_eta2_jz2 / r.sum_eta_jz_sq);
  return r;
}

double inner_opt_s(const BlockBound& bound, double kappa) {
  if (!(kappa >= 0.0)) throw InvalidInput("inner_opt_s: kappa must be non-negative");
  return bound.minimize(kappa).s;
}

CurvePoint curve_point(const EtaNodes& nodes, const BlockBound& bound, double mu) {
  double s_num = 0.0;
  double s_den = 0.0;
  double v_num = 0.0;
  double v_den = 0.0;
  for (const auto& node : nodes.nodes()) {
    const auto opt = bound.minimize(2.0 * mu / node.eta);
    const double we = node.weight * node.eta;
    const double we2 = we * node.eta;
    s_num += we * opt.s;
    s_den += we;
    v_num += we2 * opt.v;
    v_den += we2;
  }
  return {s_num / s_den, v_num / v_den};
}

double curve_gamma(const EtaNodes& nodes, const BlockBound& bound, double mu) {
  double gamma = 0.0;
  for (const auto& node : nodes.nodes()) {
    const auto opt = bound.minimize(2.0 * mu / node.eta);
    gamma += node.weight * (0.25 * node.eta * node.eta * opt.v - 0.5 * mu * node.eta * opt.s);
  }
  return gamma;
}

std::vector<double> default_curve_mu_grid(const EtaNodes& nodes, std::size_t points) {
  return log_grid(1e-4 * nodes.max_eta(), 1e3 * nodes.max_eta(), points);
}

CriterionCurve criterion_curve(const EtaNodes& nodes, const BlockBound& bound,
                               std::span<const double> mu_grid, int threads) {
  if (nodes.size() == 0) throw InvalidInput("criterion_curve: empty nodes");
  if (mu_grid.size() < 200) throw InvalidInput("criterion_curve: mu grid needs >= 200 points");
  for (std::size_t i = 1; i < mu_grid.size(); ++i) {
    if (!(mu_grid[i] > mu_grid[i - 1])) {
      throw InvalidInput("criterion_curve: mu grid must be strictly increasing");
    }
  }
  const double top = nodes.max_eta();
  if (!(mu_grid.front() > 0.0) || mu_grid.front() > 1e-4 * top * (1 + 1e-12) ||
      mu_grid.back() < 1e3 * top * (1 - 1e-12)) {
    throw InvalidInput("criterion_curve: mu grid must span [1e-4, 1e3] * max eta");
  }

  std::vector<CurvePoint> swept(mu_grid.size());
  parallel_for(mu_grid.size(), threads,
               [&](std::size_t i) { swept[i] = curve_point(nodes, bound, mu_grid[i]); });

  std::vector<CurvePoint> points;
  points.reserve(swept.size() + 2);
  points.push_back({0.0, 0.0});
  for (const auto& p : swept) points.push_back({std::clamp(p.s, 0.0, 1.0), std::clamp(p.v, 0.0, 1.0)});
  points.push_back({1.0, 1.0});

  CriterionCurve curve;
  curve.depth = bound.block_size();
  curve.bound_kind = bound.kind();
  curve.points = make_monotone(std::move(points));
  curve.eta_fingerprint = nodes.fingerprint();
  std::ostringstream desc;
  desc << "log:" << mu_grid.size() << ':' << csv::format17(mu_grid.front()) << ':'
       << csv::format17(mu_grid.back());
  curve.mu_grid_description = desc.str();

  const double violation = max_convexity_violation(curve.points);
  if (violation > kConvexityTol) {
    throw ConsistencyError("criterion curve for depth " + std::to_string(curve.depth) +
                           " is not convex (excess " + csv::format17(violation) + ")");
  }
  return curve;
}

CriterionCurve criterion_curve(const EtaNodes& nodes, const BlockBound& bound) {
  const auto grid = default_curve_mu_grid(nodes);
  return criterion_curve(nodes, bound, grid);
}

CylinderAsymptotics cylinder_asymptotics(double nu, std::size_t node_count) {
  const CylinderModel model{nu};
  const auto nodes = cylinder_nodes(model, node_count);
  const auto bound = BlockBound::separable();
  const auto all = nodes.nodes();
  if (all.size() < 2) throw NumericalError("cylinder_asymptotics: need at least two nodes");

  // Near s -> 1 only the strongest node is unsaturated; the secant is taken
  // inside that last segment of the sweep.
  const double top = all[all.size() - 1].eta;
  const double gap = top - all[all.size() - 2].eta;
  const auto a = curve_point(nodes, bound, top - 0.1 * gap);
  const auto b = curve_point(nodes, bound, top - 0.2 * gap);
  const double slope = (a.v - b.v) / (a.s - b.s);

  // Ten times the support minimum; floored at 1e-100 so s^2 stays
  // representable (the ratio no longer depends on mu once every node
  // exceeds it).
  const double mu_bottom = std::max(10.0 * model.support_min(), 1e-100);
  const auto bottom = curve_point(nodes, bound, mu_bottom);

  CylinderAsymptotics out;
  out.slope_ratio = slope / 2.0;
  out.noise_ratio = v_separable(bottom.s) / bottom.v;
  out.bottom_point = bottom;
  return out;
}

std::vector<CurvePoint> to_raw(const CriterionCurve& curve, const EtaNodes& nodes) {
  const double sz_css = 0.5 * nodes.moment(1);
  const double var_css = 0.25 * nodes.moment(2);
  std::vector<CurvePoint> raw;
  raw.reserve(curve.points.size());
  for (const auto& p : curve.points) raw.push_back({p.s * sz_css, p.v * var_css});
  return raw;
}

std::string to_csv(const CriterionCurve& curve, bool raw, const EtaNodes* nodes) {
  std::string out;
  out += "# depth=" + std::to_string(curve.depth) + "\n";
  out += "# bound=" + to_string(curve.bound_kind) + "\n";
  out += "# fingerprint=" + curve.eta_fingerprint + "\n";
  out += "# mu_grid=" + curve.mu_grid_description + "\n";
  std::vector<CurvePoint> rows = curve.points;
  if (raw) {
    if (nodes == nullptr) throw InvalidInput("raw curve export needs the eta nodes");
    rows = to_raw(curve, *nodes);
    out += "# units=raw_per_particle\nsz_per_particle,var_per_particle\n";
  } else {
    out += "s_norm,v_norm\n";
  }
  for (const auto& p : rows) {
    out += csv::format17(p.s);
    out += ',';
    out += csv::format17(p.v);
    out += '\n';
  }
  return out;
}

CriterionCurve curve_from_csv(std::string_view text) {
  CriterionCurve curve;
  bool have_depth = false;
  bool have_header = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      const auto meta = csv::trim(body.substr(1));
      const auto eq = meta.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(csv::trim(meta.substr(0, eq)));
      const std::string value(csv::trim(meta.substr(eq + 1)));
      if (key == "depth") {
        double d = 0;
        if (!csv::parse_double(value, d) || d < 1 || d != std::floor(d)) {
          throw InvalidInput("curve CSV: bad depth at line " + std::to_string(line_no));
        }
        curve.depth = static_cast<int>(d);
        have_depth = true;
      } else if (key == "bound") {
        curve.bound_kind = bound_kind_from_string(value);
      } else if (key == "fingerprint") {
        curve.eta_fingerprint = value;
      } else if (key == "mu_grid") {
        curve.mu_grid_description = value;
      } else if (key == "units") {
        throw InvalidInput("curve CSV: raw-unit curves cannot be used for certification");
      }
      continue;
    }
    if (!have_header) {
      have_header = true;
      if (body == "s_norm,v_norm") continue;
    }
    const auto fields = csv::split_fields(body);
    CurvePoint p;
    if (fields.size() != 2 || !csv::parse_double(fields[0], p.s) || !csv::parse_double(fields[1], p.v)) {
      throw InvalidInput("curve CSV: malformed row at line " + std::to_string(line_no));
    }
    curve.points.push_back(p);
  }
  if (!have_depth) throw InvalidInput("curve CSV: missing '# depth=' header");
  if (curve.points.size() < 2 || curve.points.front().s != 0.0 || curve.points.back().s != 1.0) {
    throw InvalidInput("curve CSV: curve must contain the endpoints s = 0 and s = 1");
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    if (curve.points[i].s < curve.points[i - 1].s) {
      throw InvalidInput("curve CSV: s_norm must be non-decreasing");
    }
  }
  return curve;
}

}  // namespace entdepth
