#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pis/core.hpp"
#include "pis/mobility.hpp"
#include "pis/rng.hpp"

namespace pis {

struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean;
  double sigma_x = 1.0;  // standard deviations of the diagonal covariance
  double sigma_y = 1.0;

  double pdf(Vec2 z) const {
    const double u = (z.x - mean.x) / sigma_x;
    const double v = (z.y - mean.y) / sigma_y;
    return std::exp(-0.5 * (u * u + v * v)) / (2.0 * kPi * sigma_x * sigma_y);
  }
};

/// Weighted sum of axis-aligned 2D Gaussians over ground positions.
class GaussianMixture2D {
 public:
  GaussianMixture2D() = default;
  explicit GaussianMixture2D(std::vector<GaussianComponent> components) : components_(std::move(components)) {
    validate();
  }

  const std::vector<GaussianComponent>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }

  double pdf(Vec2 z) const {
    double sum = 0.0;
    for (const auto& c : components_) sum += c.weight * c.pdf(z);
    return sum;
  }

  Vec2 sample(RandomStream& rng) const {
    const GaussianComponent& c = pick(rng.uniform());
    return {c.mean.x + c.sigma_x * rng.normal(), c.mean.y + c.sigma_y * rng.normal()};
  }

  /// Weight-averaged mean position.
  Vec2 mean() const {
    Vec2 m;
    for (const auto& c : components_) m = m + c.weight * c.mean;
    return m;
  }

 private:
  void validate() const {
    if (components_.empty()) throw ConfigError("gaussian mixture needs at least one component");
    double total = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const auto& c = components_[k];
      const std::string where = "gaussian mixture component " + std::to_string(k);
      if (!(c.weight > 0.0 && c.weight <= 1.0)) throw ConfigError(where + ": weight must be in (0, 1]");
      if (!(c.sigma_x > 0.0 && c.sigma_y > 0.0) || !std::isfinite(c.sigma_x) || !std::isfinite(c.sigma_y))
        throw ConfigError(where + ": standard deviations must be finite and > 0");
      if (!is_finite(c.mean)) throw ConfigError(where + ": mean must be finite");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("gaussian mixture weights must sum to 1");
  }

  const GaussianComponent& pick(double u) const {
    double acc = 0.0;
    for (const auto& c : components_) {
      acc += c.weight;
      if (u < acc) return c;
    }
    return components_.back();
  }

  std::vector<GaussianComponent> components_;
};

/// Mobility circle intersected with the square [lo, hi]^2 (the simulation area). The default
/// bounds leave the circle unclipped.
struct ClippedDisk {
  MobilityCircle circle;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(Vec2 z) const {
    return circle.contains(z) && z.x >= lo && z.x <= hi && z.y >= lo && z.y <= hi;
  }

  bool clipped() const {
    const auto& c = circle;
    return c.center.x - c.radius < lo || c.center.x + c.radius > hi || c.center.y - c.radius < lo ||
           c.center.y + c.radius > hi;
  }
};

inline ClippedDisk clip_to_area(const MobilityCircle& circle, double side_length) {
  return {circle, 0.0, side_length};
}

namespace detail {

// Integrates f(x) * (vertical extent of the region at x) over the region, where `vertical`
// receives the clipped chord [y_lo, y_hi] at x. The disk is parametrised by x = cx + r sin(t)
// so the chord's square-root endpoints become smooth; breakpoints split the range at every
// kink introduced by the square.
template <class Vertical>
double integrate_over_disk(const ClippedDisk& region, double x_min, double x_max, double extra_break,
                           double tol, Vertical&& vertical) {
  const double cx = region.circle.center.x;
  const double cy = region.circle.center.y;
  const double r = region.circle.radius;
  if (!(r > 0.0)) return 0.0;
  const double a = std::max({cx - r, region.lo, x_min});
  const double b = std::min({cx + r, region.hi, x_max});
  if (!(a < b)) return 0.0;

  std::vector<double> xs{a, b};
  auto add = [&](double x) {
    if (x > a && x < b) xs.push_back(x);
  };
  add(extra_break);
  add(region.lo);
  add(region.hi);
  for (const double edge : {region.lo, region.hi}) {
    const double dy = edge - cy;
    if (std::isfinite(dy) && std::abs(dy) < r) {
      const double half = std::sqrt(r * r - dy * dy);
      add(cx - half);
      add(cx + half);
    }
  }
  std::sort(xs.begin(), xs.end());

  auto to_angle = [&](double x) { return std::asin(std::clamp((x - cx) / r, -1.0, 1.0)); };
  auto integrand = [&](double t) {
    const double x = cx + r * std::sin(t);
    const double half = r * std::cos(t);
    const double y_lo = std::max(cy - half, region.lo);
    const double y_hi = std::min(cy + half, region.hi);
    if (!(y_lo < y_hi)) return 0.0;
    return half * vertical(x, y_lo, y_hi);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double t0 = to_angle(xs[i]);
    const double t1 = to_angle(xs[i + 1]);
    if (!(t0 < t1)) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, t0, t1, 12, tol);
  }
  return total;
}

inline double normal_cdf_diff(double lo, double hi) {
  // P(lo < Z < hi) for standard normal Z, evaluated in whichever tail keeps precision.
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  if (lo >= 0.0) return 0.5 * (std::erfc(lo * inv_sqrt2) - std::erfc(hi * inv_sqrt2));
  if (hi <= 0.0) return 0.5 * (std::erfc(-hi * inv_sqrt2) - std::erfc(-lo * inv_sqrt2));
  return 1.0 - 0.5 * (std::erfc(-lo * inv_sqrt2) + std::erfc(hi * inv_sqrt2));
}

// Mass of N(mu, sigma^2 I) inside a disk of radius r whose centre is d away from mu, i.e. the
// CDF of a noncentral chi-square with 2 degrees of freedom at (r/sigma)^2. Poisson mixture of
// upper regularized gammas Q(j+1, y); every term is positive so nothing cancels.
inline double isotropic_disk_mass(double d, double r, double sigma) {
  const double half_lambda = 0.5 * (d / sigma) * (d / sigma);
  const double y = 0.5 * (r / sigma) * (r / sigma);
  if (half_lambda > 50.0) {
    boost::math::non_central_chi_squared dist(2.0, 2.0 * half_lambda);
    return boost::math::cdf(dist, 2.0 * y);
  }
  double poisson = std::exp(-half_lambda);  // P(J = j)
  double gamma_term = std::exp(-y);         // y^j e^-y / j!
  double upper = gamma_term;                // Q(j + 1, y)
  double outside = 0.0;
  for (int j = 0; j < 1000; ++j) {
    outside += poisson * upper;
    poisson *= half_lambda / (j + 1);
    gamma_term *= y / (j + 1);
    upper += gamma_term;
    // past the Poisson mode the remaining weights shrink geometrically
    if (j > half_lambda && poisson < 1e-18) break;
  }
  return std::clamp(1.0 - outside, 0.0, 1.0);
}

}  // namespace detail

/// Area of the clipped disk; exactly pi r^2 when the disk lies inside the square.
inline double region_area(const ClippedDisk& region) {
  if (!region.clipped()) return region.circle.area();
  const double inf = std::numeric_limits<double>::infinity();
  return detail::integrate_over_disk(region, -inf, inf, region.circle.center.x, 1e-12,
                                     [](double, double lo, double hi) { return hi - lo; });
}

/// Probability mass of the mixture inside the region, by adaptive Gauss-Kronrod quadrature
/// over x of the closed-form vertical Gaussian integral. Absolute error <= tol. Isotropic
/// components on an unclipped disk use the exact noncentral chi-square form instead.
inline double gmm_mass_in_region(const GaussianMixture2D& g, const ClippedDisk& region, double tol = 1e-4) {
  if (!(tol > 0.0)) throw DomainError("gmm_mass_in_region: tol must be > 0");
  if (!(region.circle.radius > 0.0)) return 0.0;
  constexpr double kTail = 9.0;  // normal mass beyond 9 sigma is below 1e-18
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * kPi);
  double total = 0.0;
  const bool whole_disk = !region.clipped();
  for (const auto& c : g.components()) {
    if (whole_disk && c.sigma_x == c.sigma_y) {
      total += c.weight * detail::isotropic_disk_mass(distance(c.mean, region.circle.center), region.circle.radius,
                                                      c.sigma_x);
      continue;
    }
    auto vertical = [&](double x, double y_lo, double y_hi) {
      const double u = (x - c.mean.x) / c.sigma_x;
      const double density_x = std::exp(-0.5 * u * u) * inv_sqrt_2pi / c.sigma_x;
      return density_x * detail::normal_cdf_diff((y_lo - c.mean.y) / c.sigma_y, (y_hi - c.mean.y) / c.sigma_y);
    };
    const double mass = detail::integrate_over_disk(region, c.mean.x - kTail * c.sigma_x,
                                                    c.mean.x + kTail * c.sigma_x, c.mean.x, tol, vertical);
    total += c.weight * mass;
  }
  return std::clamp(total, 0.0, 1.0);
}

inline double gmm_mass_in_circle(const GaussianMixture2D& g, const MobilityCircle& circle, double tol = 1e-4) {
  return gmm_mass_in_region(g, ClippedDisk{circle}, tol);
}

}  // namespace pis
