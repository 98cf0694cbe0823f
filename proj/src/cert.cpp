#include "entdepth/cert.hpp"

#include <algorithm>
#include <sstream>

#include "entdepth/csv.hpp"
#include "entdepth/error.hpp"

namespace entdepth {

double interpolate(const CriterionCurve& curve, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("interpolate: s must lie in [0, 1]");
  if (curve.points.empty() || curve.points.front().s != 0.0 || curve.points.back().s != 1.0) {
    throw InvalidInput("interpolate: curve lacks its endpoints");
  }
  return interpolate_linear(curve.points, s);
}

double lower_envelope(const CriterionCurve& curve, double s) {
  const double chord = interpolate(curve, s);
  const auto& pts = curve.points;
  const std::size_t count = pts.size();
  if (count < 3) return chord;
  auto upper = std::upper_bound(pts.begin(), pts.end(), s,
                                [](double x, const CurvePoint& p) { return x < p.s; });
  // Segment [k, k + 1] containing s.
  std::size_t k = static_cast<std::size_t>(upper - pts.begin());
  k = k == 0 ? 0 : std::min(k - 1, count - 2);
  if (pts[k].s == s) return pts[k].v;
  if (pts[k + 1].s == s) return pts[k + 1].v;

  auto extend = [&](std::size_t a, std::size_t b) {
    const double ds = pts[b].s - pts[a].s;
    if (!(ds > 1e-12)) return 0.0;
    return pts[a].v + (pts[b].v - pts[a].v) / ds * (s - pts[a].s);
  };
  double bound = 0.0;
  if (k >= 1) bound = std::max(bound, extend(k - 1, k));
  if (k + 2 < count) bound = std::max(bound, extend(k + 1, k + 2));
  return std::min(bound, chord);
}

void check_curve_family(std::span<const CriterionCurve> curves) {
  if (curves.empty()) throw InvalidInput("certify: no curves");
  if (curves.front().depth != 1) throw InvalidInput("certify: the shallowest curve must be depth 1");
  for (std::size_t i = 1; i < curves.size(); ++i) {
    if (curves[i].depth <= curves[i - 1].depth) {
      throw InvalidInput("certify: curve depths must be strictly increasing");
    }
    if (curves[i].eta_fingerprint != curves.front().eta_fingerprint) {
      throw ConsistencyError("certify: curves come from different eta distributions (" +
                             curves.front().eta_fingerprint + " vs " + curves[i].eta_fingerprint + ")");
    }
  }
}

DepthVerdict certify(const DataPoint& point, std::span<const CriterionCurve> curves, double k_sigma) {
  check_curve_family(curves);
  if (!(k_sigma >= 0.0)) throw InvalidInput("certify: k_sigma must be non-negative");
  if (!(point.s_norm >= 0.0 && point.s_norm <= 1.0)) throw InvalidInput("certify: s_norm outside [0, 1]");
  if (!(point.v_norm >= 0.0)) throw InvalidInput("certify: v_norm must be non-negative");
  if (point.sigma_v && !(*point.sigma_v >= 0.0)) throw InvalidInput("certify: sigma_v must be >= 0");

  DepthVerdict verdict;
  const double inflation = point.sigma_v ? k_sigma * *point.sigma_v : 0.0;
  verdict.conservative = inflation > 0.0;
  const double tested = point.v_norm + inflation;
  verdict.margin = lower_envelope(curves.front(), point.s_norm) - tested;
  for (const auto& curve : curves) {
    const double margin = lower_envelope(curve, point.s_norm) - tested;
    if (margin > 0.0) {
      verdict.certified_depth = curve.depth + 1;
      verdict.margin = margin;
    }
  }
  return verdict;
}

std::vector<DataPoint> data_points_from_csv(std::string_view text) {
  std::vector<DataPoint> points;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = csv::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = csv::split_fields(body);
    if (first_row) {
      first_row = false;
      if (!fields.empty() && fields[0] == "s_norm") continue;
    }
    const auto fail = [&] {
      return InvalidInput("data CSV: malformed row at line " + std::to_string(line_no));
    };
    if (fields.size() < 2 || fields.size() > 4) throw fail();
    DataPoint p;
    if (!csv::parse_double(fields[0], p.s_norm) || !csv::parse_double(fields[1], p.v_norm)) throw fail();
    if (!(p.s_norm >= 0.0 && p.s_norm <= 1.0) || !(p.v_norm >= 0.0)) throw fail();
    if (fields.size() >= 3) {
      double sigma = 0.0;
      if (csv::parse_double(fields[2], sigma)) {
        if (!(sigma >= 0.0)) throw fail();
        p.sigma_v = sigma;
        if (fields.size() == 4) p.label = fields[3];
      } else if (fields[2].empty()) {
        if (fields.size() == 4) p.label = fields[3];
      } else if (fields.size() == 3) {
        p.label = fields[2];
      } else {
        throw fail();
      }
    }
    if (p.label.empty()) p.label = "row" + std::to_string(line_no);
    points.push_back(std::move(p));
  }
  return points;
}

std::string verdicts_csv(std::span<const DataPoint> points, std::span<const DepthVerdict> verdicts) {
  if (points.size() != verdicts.size()) throw InvalidInput("verdicts_csv: size mismatch");
  std::string out = "label,s_norm,v_norm,certified_depth,margin\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out += points[i].label + ',' + csv::format17(points[i].s_norm) + ',' +
           csv::format17(points[i].v_norm) + ',' + std::to_string(verdicts[i].certified_depth) + ',' +
           csv::format17(verdicts[i].margin) + '\n';
  }
  return out;
}

}  // namespace entdepth
