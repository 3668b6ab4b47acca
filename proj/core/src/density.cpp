#include "crystab/density.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "json.hpp"

namespace crystab {

using nlohmann::json;

const char* to_string(DensityFamily family) {
  switch (family) {
    case DensityFamily::gaussian: return "gaussian";
    case DensityFamily::wai_product: return "wai_product";
    case DensityFamily::wai_smooth: return "wai_smooth";
    case DensityFamily::modulated: return "modulated";
    case DensityFamily::custom_table: return "custom_table";
    case DensityFamily::custom: return "custom";
  }
  return "unknown";
}

IonDensity::IonDensity(DensityFamily family, double total_charge, Transform transform, Params params,
                       std::string descriptor)
    : family_(family),
      total_charge_(total_charge),
      transform_(std::make_shared<const Transform>(std::move(transform))),
      params_(std::move(params)),
      descriptor_(std::move(descriptor)) {
  if (!*transform_) throw InvalidArgument("IonDensity: empty transform");
  if (descriptor_.empty()) {
    json j;
    j["family"] = to_string(family_);
    j["params"] = params_;
    descriptor_ = j.dump();
  }
}

IonDensity IonDensity::rescaled(double total_charge) const {
  if (!(total_charge > 0.0)) throw InvalidArgument("IonDensity::rescaled: total charge must be positive");
  if (total_charge_ == 0.0) throw InvalidArgument("IonDensity::rescaled: cannot rescale a zero-charge density");
  const double factor = total_charge / total_charge_;
  auto inner = transform_;
  return IonDensity(family_, total_charge, [inner, factor](const Vec3& xi) { return factor * (*inner)(xi); },
                    params_, descriptor_);
}

double wai_factor(double t) {
  if (t == 0.0) return 1.0;
  // sin(t/2) = sin(pi u), u = t / (2 pi); reduce u to the nearest integer first
  const double u = t / kTwoPi;
  const double n = std::round(u);
  const double r = u - n;
  if (r == 0.0) return 0.0;
  const double sign = (static_cast<long long>(n) % 2 == 0) ? 1.0 : -1.0;
  return 2.0 * sign * std::sin(kPi * r) / t * std::exp(-t * t);
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be positive and finite");
}

double lattice_bump(const Vec3& xi) {
  double h = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double s = std::sin(0.5 * xi[k]);
    h += s * s;
  }
  return h;
}

}  // namespace

IonDensity make_wai_product_density(double total_charge) {
  require_positive(total_charge, "make_wai_product_density: eZ");
  return IonDensity(DensityFamily::wai_product, total_charge, [total_charge](const Vec3& xi) {
    return cplx(total_charge * wai_factor(xi[0]) * wai_factor(xi[1]) * wai_factor(xi[2]));
  });
}

IonDensity make_gaussian_density(double total_charge, double width) {
  require_positive(total_charge, "make_gaussian_density: eZ");
  require_positive(width, "make_gaussian_density: width");
  return IonDensity(DensityFamily::gaussian, total_charge,
                    [total_charge, width](const Vec3& xi) { return cplx(total_charge * std::exp(-width * xi.squaredNorm())); },
                    {{"width", width}});
}

IonDensity make_wai_smooth_density(double total_charge, double weight, double width) {
  require_positive(total_charge, "make_wai_smooth_density: eZ");
  require_positive(width, "make_wai_smooth_density: width");
  if (!(weight >= 0.0)) throw InvalidArgument("make_wai_smooth_density: weight must be >= 0");
  return IonDensity(DensityFamily::wai_smooth, total_charge,
                    [total_charge, weight, width](const Vec3& xi) {
                      const double product = wai_factor(xi[0]) * wai_factor(xi[1]) * wai_factor(xi[2]);
                      const double filler = weight * lattice_bump(xi) * std::exp(-width * xi.squaredNorm());
                      return cplx(total_charge * (product + filler));
                    },
                    {{"weight", weight}, {"width", width}});
}

IonDensity make_modulated_density(const IonDensity& base, double s, double width) {
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("make_modulated_density: damping s must lie in (0, 1]");
  require_positive(width, "make_modulated_density: width");
  const double inv_w2 = 1.0 / (width * width);
  auto mask = [s, inv_w2](const Vec3& xi) {
    const Vec3 base_k = (xi / kTwoPi).array().round();
    double acc = 0.0;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          const Vec3 k = kTwoPi * (base_k + Vec3(a, b, c));
          acc += std::exp(-(xi - k).squaredNorm() * inv_w2);
        }
    return s + (1.0 - s) * acc;
  };
  json j;
  j["family"] = "modulated";
  j["base"] = json::parse(density_spec_json(base));
  j["params"] = {{"s", s}, {"width", width}};
  IonDensity copy = base;
  return IonDensity(DensityFamily::modulated, base.total_charge(),
                    [copy, mask](const Vec3& xi) { return copy(xi) * mask(xi); }, {{"s", s}, {"width", width}},
                    j.dump());
}

IonDensity load_table_density(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw InvalidArgument("load_table_density: cannot open " + csv.string());
  struct Row {
    double x[3];
    cplx v;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Row r{};
    double re = 0.0, im = 0.0;
    if (!(ls >> r.x[0] >> r.x[1] >> r.x[2] >> re >> im)) {
      if (rows.empty()) continue;  // header
      throw InvalidArgument("load_table_density: malformed row '" + line + "'");
    }
    r.v = cplx(re, im);
    rows.push_back(r);
  }
  if (rows.empty()) throw InvalidArgument("load_table_density: no data in " + csv.string());

  std::array<std::vector<double>, 3> axes;
  for (int k = 0; k < 3; ++k) {
    for (const auto& r : rows) axes[k].push_back(r.x[k]);
    std::sort(axes[k].begin(), axes[k].end());
    axes[k].erase(std::unique(axes[k].begin(), axes[k].end()), axes[k].end());
    if (axes[k].size() < 2) throw InvalidArgument("load_table_density: each axis needs at least two nodes");
  }
  const std::size_t n0 = axes[0].size(), n1 = axes[1].size(), n2 = axes[2].size();
  if (rows.size() != n0 * n1 * n2) throw InvalidArgument("load_table_density: table is not a full regular grid");
  auto values = std::make_shared<std::vector<cplx>>(rows.size());
  auto locate = [&](int k, double x) {
    return static_cast<std::size_t>(std::lower_bound(axes[k].begin(), axes[k].end(), x) - axes[k].begin());
  };
  for (const auto& r : rows) (*values)[(locate(0, r.x[0]) * n1 + locate(1, r.x[1])) * n2 + locate(2, r.x[2])] = r.v;

  auto shared_axes = std::make_shared<std::array<std::vector<double>, 3>>(std::move(axes));
  auto transform = [values, shared_axes, n1, n2](const Vec3& xi) -> cplx {
    std::size_t lo[3];
    double frac[3];
    for (int k = 0; k < 3; ++k) {
      const auto& ax = (*shared_axes)[k];
      if (xi[k] < ax.front() || xi[k] > ax.back()) return 0.0;
      std::size_t hi = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), xi[k]) - ax.begin());
      hi = std::clamp<std::size_t>(hi, 1, ax.size() - 1);
      lo[k] = hi - 1;
      frac[k] = (xi[k] - ax[lo[k]]) / (ax[hi] - ax[lo[k]]);
    }
    cplx acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      double w = 1.0;
      std::size_t idx[3];
      for (int k = 0; k < 3; ++k) {
        const int bit = (c >> k) & 1;
        idx[k] = lo[k] + static_cast<std::size_t>(bit);
        w *= bit ? frac[k] : 1.0 - frac[k];
      }
      acc += w * (*values)[(idx[0] * n1 + idx[1]) * n2 + idx[2]];
    }
    return acc;
  };
  const double charge = transform(Vec3::Zero()).real();
  json j;
  j["family"] = "custom_table";
  j["table"] = std::filesystem::absolute(csv).string();
  return IonDensity(DensityFamily::custom_table, charge, transform, {}, j.dump());
}

IonDensity density_from_json(const std::string& json_text, double default_charge) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("density spec: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("family")) throw InvalidArgument("density spec: missing 'family'");
  const std::string family = j.at("family").get<std::string>();
  const double charge = j.contains("eZ") ? j.at("eZ").get<double>() : default_charge;
  const json params = j.value("params", json::object());
  auto param = [&](const char* key, double fallback) {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
  };

  if (family == "wai_product") return make_wai_product_density(charge);
  if (family == "gaussian") return make_gaussian_density(charge, param("width", 0.05));
  if (family == "wai_smooth") return make_wai_smooth_density(charge, param("weight", 1.0), param("width", 0.05));
  if (family == "modulated") {
    if (!j.contains("base")) throw InvalidArgument("density spec: 'modulated' needs a 'base' density");
    json base = j.at("base");
    if (!base.contains("eZ")) base["eZ"] = charge;
    return make_modulated_density(density_from_json(base.dump(), charge), param("s", 0.05), param("width", 0.5));
  }
  if (family == "custom_table") {
    if (!j.contains("table")) throw InvalidArgument("density spec: 'custom_table' needs a 'table' path");
    IonDensity table = load_table_density(j.at("table").get<std::string>());
    return j.contains("eZ") ? table.rescaled(charge) : table;
  }
  throw InvalidArgument("density spec: unknown family '" + family + "'");
}

std::string density_spec_json(const IonDensity& d) {
  json j = json::parse(d.descriptor());
  j["eZ"] = d.total_charge();
  return j.dump();
}

double min_eigenvalue_3x3(const Eigen::Matrix3cd& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  const Eigen::Matrix3cd h = 0.5 * (m + m.adjoint()) / scale;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0] * scale;
}

double gram_min_eigenvalue(const Eigen::Matrix<cplx, Eigen::Dynamic, 3>& rows) {
  const Eigen::Index k = rows.rows();
  if (k < 3) return 0.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  const Eigen::VectorXd norms = rows.rowwise().norm();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return norms[a] > norms[b]; });
  Eigen::Matrix<cplx, Eigen::Dynamic, 3> sorted(k, 3);
  for (Eigen::Index i = 0; i < k; ++i) sorted.row(i) = rows.row(order[static_cast<std::size_t>(i)]);
  Eigen::ColPivHouseholderQR<Eigen::Matrix<cplx, Eigen::Dynamic, 3>> qr(sorted);
  const Eigen::Matrix3cd r = qr.matrixR().topLeftCorner(3, 3).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(r);
  const double smin = svd.singularValues().minCoeff();
  return smin * smin;
}

Eigen::Matrix<cplx, Eigen::Dynamic, 3> wiener_factor(const IonDensity& d, const BlochParameter& theta, int m_sum) {
  theta.require_admissible("wiener_factor");
  if (m_sum < 1) throw InvalidArgument("wiener_factor: M_sum must be >= 1");
  const int side = 2 * m_sum + 1;
  Eigen::Matrix<cplx, Eigen::Dynamic, 3> rows(side * side * side, 3);
  Eigen::Index r = 0;
  for (int a = -m_sum; a <= m_sum; ++a)
    for (int b = -m_sum; b <= m_sum; ++b)
      for (int c = -m_sum; c <= m_sum; ++c, ++r) {
        const Vec3 xi = kTwoPi * Vec3(a, b, c) - theta.theta();
        rows.row(r) = (std::abs(d(xi)) / xi.norm() * xi).transpose().cast<cplx>();
      }
  return rows;
}

double wiener_min_eigenvalue(const IonDensity& d, const BlochParameter& theta, int m_sum) {
  return gram_min_eigenvalue(wiener_factor(d, theta, m_sum));
}

namespace {

double lattice_tail_sum(int m_sum) {
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(m_sum); it != cache.end()) return it->second;
  const int outer = 3 * m_sum;
  double acc = 0.0;
  for (int a = -outer; a <= outer; ++a)
    for (int b = -outer; b <= outer; ++b)
      for (int c = -outer; c <= outer; ++c) {
        if (std::max({std::abs(a), std::abs(b), std::abs(c)}) <= m_sum) continue;
        const double k2 = kTwoPi * kTwoPi * (a * a + b * b + c * c);
        acc += 1.0 / ((1.0 + k2) * (1.0 + k2));
      }
  // Remainder beyond the outer cube, bounded by the radial integral from R = outer.
  acc += 1.0 / (4.0 * kPi * kPi * kPi * outer);
  cache.emplace(m_sum, acc);
  return acc;
}

}  // namespace

WienerMatrix wiener_matrix(const IonDensity& d, const BlochParameter& theta, int m_sum, double decay_constant) {
  theta.require_admissible("wiener_matrix");
  if (m_sum < 1) throw InvalidArgument("wiener_matrix: M_sum must be >= 1");
  WienerMatrix out;
  out.sigma.setZero();
  double fitted_c = 0.0;
  for (int a = -m_sum; a <= m_sum; ++a)
    for (int b = -m_sum; b <= m_sum; ++b)
      for (int c = -m_sum; c <= m_sum; ++c) {
        const Vec3 xi = kTwoPi * Vec3(a, b, c) - theta.theta();
        const double xi2 = xi.squaredNorm();
        const cplx s = d(xi);
        const double w = std::norm(s) / xi2;
        out.sigma += (w * (xi * xi.transpose())).cast<cplx>();
        fitted_c = std::max(fitted_c, (1.0 + xi2) * std::abs(s));
      }
  const double c = decay_constant >= 0.0 ? decay_constant : fitted_c;
  out.tail_bound = c * c * lattice_tail_sum(m_sum);
  return out;
}

ConditionReport check_conditions(const IonDensity& d, double tol_rel, int m_chk) {
  ConditionReport report;
  if (m_chk < 1) return report;
  try {
  const cplx at_zero = d(Vec3::Zero());
  const double eZ = d.total_charge();
  report.satisfies_ro_plus = eZ > 0.0 && at_zero.real() > 0.0 &&
                             std::abs(at_zero - cplx(eZ)) <= 1e-12 * std::max(1.0, std::abs(eZ));

  const double tol = tol_rel * (eZ > 0.0 ? eZ : 1.0);
  double worst = 0.0;
  for (int a = -m_chk; a <= m_chk; ++a)
    for (int b = -m_chk; b <= m_chk; ++b)
      for (int c = -m_chk; c <= m_chk; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        worst = std::max(worst, std::abs(d(kTwoPi * Vec3(a, b, c))));
      }
  report.wai_max_violation = worst;
  report.satisfies_wai = worst < tol;

  const double radius = kTwoPi * m_chk;
  double c_fit = 0.0;
  for (int a = -2 * m_chk; a <= 2 * m_chk; ++a)
    for (int b = -2 * m_chk; b <= 2 * m_chk; ++b)
      for (int c = -2 * m_chk; c <= 2 * m_chk; ++c) {
        const Vec3 xi = kPi * Vec3(a, b, c);
        if (xi.norm() > radius) continue;
        c_fit = std::max(c_fit, (1.0 + xi.squaredNorm()) * std::abs(d(xi)));
      }
  report.decay_constant = c_fit;

  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        const Vec3 theta = kTwoPi / 4.0 * Vec3(a + 0.5, b + 0.5, c + 0.5);
        report.wiener_min_eig.push_back({theta, wiener_min_eigenvalue(d, BlochParameter(theta), m_chk)});
      }
  } catch (const std::exception&) {
    report.satisfies_ro_plus = false;
  }
  return report;
}

}  // namespace crystab
