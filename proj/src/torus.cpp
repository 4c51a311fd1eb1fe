#include "cocycle/torus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace cocycle {

namespace {

using i128 = __int128;

constexpr double kDyadicScale = 1099511627776.0;  // 2^40

std::int64_t checked_i64(i128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
    throw SizeError("integer overflow in exact torus arithmetic");
  }
  return static_cast<std::int64_t>(v);
}

i128 floor_mod(i128 a, i128 m) {
  i128 r = a % m;
  return r < 0 ? r + m : r;
}

using I128Matrix = std::vector<std::vector<i128>>;

I128Matrix to_i128(const IntMatrix& m) {
  I128Matrix out(m.rows(), std::vector<i128>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

// Fraction-free Gaussian elimination.
i128 bareiss_det(I128Matrix a) {
  const std::size_t n = a.size();
  if (n == 0) return 1;
  i128 sign = 1;
  i128 prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k][k] == 0) {
      std::size_t swap_row = k + 1;
      while (swap_row < n && a[swap_row][k] == 0) ++swap_row;
      if (swap_row == n) return 0;
      std::swap(a[k], a[swap_row]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
      }
    }
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

I128Matrix adjugate(const I128Matrix& a) {
  const std::size_t n = a.size();
  I128Matrix adj(n, std::vector<i128>(n));
  if (n == 1) {
    adj[0][0] = 1;
    return adj;
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      I128Matrix minor;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == r) continue;
        std::vector<i128> row;
        for (std::size_t j = 0; j < n; ++j)
          if (j != c) row.push_back(a[i][j]);
        minor.push_back(std::move(row));
      }
      const i128 cof = bareiss_det(minor) * (((r + c) % 2 == 0) ? 1 : -1);
      adj[c][r] = cof;
    }
  }
  return adj;
}

// Lower-triangular column Hermite form H = B U with positive diagonal.
I128Matrix column_hermite_form(I128Matrix h) {
  const std::size_t k = h.size();
  auto col_axpy = [&](std::size_t dst, std::size_t src, i128 q) {
    for (std::size_t r = 0; r < k; ++r) h[r][dst] -= q * h[r][src];
  };
  auto col_swap = [&](std::size_t a, std::size_t b) {
    for (std::size_t r = 0; r < k; ++r) std::swap(h[r][a], h[r][b]);
  };
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      while (h[i][j] != 0) {
        const i128 q = h[i][i] / h[i][j];
        col_axpy(i, j, q);
        col_swap(i, j);
      }
    }
    if (h[i][i] == 0) throw DomainError("M^n - I is singular");
    if (h[i][i] < 0)
      for (std::size_t r = 0; r < k; ++r) h[r][i] = -h[r][i];
    for (std::size_t j = 0; j < i; ++j) {
      const i128 q = (h[i][j] - floor_mod(h[i][j], h[i][i])) / h[i][i];
      col_axpy(j, i, q);
    }
  }
  return h;
}

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

std::vector<std::int64_t> step_numerators(const IntMatrix& m, const std::vector<std::int64_t>& num,
                                          std::int64_t den) {
  const std::size_t k = num.size();
  std::vector<std::int64_t> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    i128 s = 0;
    for (std::size_t j = 0; j < k; ++j) s += static_cast<i128>(m(i, j)) * num[j];
    out[i] = static_cast<std::int64_t>(floor_mod(s, den));
  }
  return out;
}

double real_eigenvector_sign_fix(Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      break;
    }
  }
  return v.norm();
}

}  // namespace

// --- TorusPoint ------------------------------------------------------------

double wrap_unit(double t) {
  double r = t - std::floor(t);
  if (r >= 1.0) r = 0.0;
  return r;
}

TorusPoint::TorusPoint(const Vector& coords) : coords_(coords) {
  for (Eigen::Index i = 0; i < coords_.size(); ++i) coords_(i) = wrap_unit(coords_(i));
}

TorusPoint::TorusPoint(std::initializer_list<double> coords) {
  coords_.resize(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index i = 0;
  for (double c : coords) coords_(i++) = wrap_unit(c);
}

Vector torus_displacement(const TorusPoint& x, const TorusPoint& y) {
  Vector d = y.coords() - x.coords();
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) -= std::round(d(i));
  return d;
}

double torus_dist(const TorusPoint& x, const TorusPoint& y) {
  return torus_displacement(x, y).norm();
}

double torus_diameter(Eigen::Index k) { return std::sqrt(static_cast<double>(k)) / 2.0; }

TorusPoint quantize(const TorusPoint& x, int bits) {
  const double scale = std::ldexp(1.0, bits);
  Vector c = x.coords();
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = std::round(c(i) * scale) / scale;
  return TorusPoint(c);
}

TorusPoint random_point(Eigen::Index k, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint64_t> dist(0, (1ULL << 40) - 1);
  Vector c(k);
  for (Eigen::Index i = 0; i < k; ++i) c(i) = static_cast<double>(dist(rng)) / kDyadicScale;
  return TorusPoint(c);
}

std::vector<TorusPoint> uniform_grid(Eigen::Index k, int res) {
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < k; ++i) total *= static_cast<std::size_t>(res);
  std::vector<TorusPoint> out;
  out.reserve(total);
  Vector c(k);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (Eigen::Index i = k - 1; i >= 0; --i) {
      c(i) = static_cast<double>(rem % static_cast<std::size_t>(res)) / res;
      rem /= static_cast<std::size_t>(res);
    }
    out.emplace_back(c);
  }
  return out;
}

// --- RationalPoint ----------------------------------------------------------

RationalPoint::RationalPoint(std::vector<std::int64_t> numerators, std::int64_t denominator)
    : num_(std::move(numerators)), den_(denominator) {
  if (den_ <= 0) throw DomainError("rational point denominator must be positive");
  std::int64_t g = den_;
  for (auto& n : num_) {
    n = static_cast<std::int64_t>(floor_mod(n, den_));
    g = std::gcd(g, n);
  }
  if (g > 1) {
    den_ /= g;
    for (auto& n : num_) n /= g;
  }
}

TorusPoint RationalPoint::to_torus() const {
  Vector c(static_cast<Eigen::Index>(num_.size()));
  for (std::size_t i = 0; i < num_.size(); ++i)
    c(static_cast<Eigen::Index>(i)) = static_cast<double>(num_[i]) / static_cast<double>(den_);
  return TorusPoint(c);
}

std::string RationalPoint::coordinate_string(std::size_t i) const {
  const std::int64_t g = std::gcd(num_.at(i), den_);
  return std::to_string(num_[i] / g) + "/" + std::to_string(den_ / g);
}

// --- ToralAutomorphism ------------------------------------------------------

ToralAutomorphism::ToralAutomorphism(const IntMatrix& m) : m_(m) {
  if (m.rows() != m.cols() || m.rows() < 2) {
    throw DomainError("toral automorphism must be a square matrix of size >= 2");
  }
  const i128 det = bareiss_det(to_i128(m));
  if (det != 1 && det != -1) {
    throw DomainError("toral automorphism must have |det| = 1 (got det = " +
                      std::to_string(static_cast<long long>(det)) + ")");
  }
  const I128Matrix adj = adjugate(to_i128(m));
  m_inv_.resize(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m_inv_(i, j) = checked_i64(adj[i][j] * det);

  Eigen::EigenSolver<Matrix> es(m.cast<double>());
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();

  kappa_ = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    const double mod = std::abs(eigenvalues_(i));
    if (std::abs(mod - 1.0) < 1e-9) {
      throw DomainError("toral automorphism is not hyperbolic: eigenvalue of modulus 1");
    }
    kappa_ = std::min(kappa_, std::abs(std::log(mod)));
  }

  const Eigen::Index k = m.rows();
  std::vector<Vector> stable, unstable;
  double best_stable = -1.0, best_unstable = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto mu = eigenvalues_(i);
    const Eigen::VectorXcd v = eigenvectors_.col(i);
    const bool is_stable = std::abs(mu) < 1.0;
    auto& bucket = is_stable ? stable : unstable;
    if (std::abs(mu.imag()) < 1e-12) {
      Vector re = v.real();
      re /= real_eigenvector_sign_fix(re);
      bucket.push_back(re);
      if (is_stable && std::abs(mu) > best_stable) {
        best_stable = std::abs(mu);
        stable_dir_ = re;
        stable_mu_ = mu.real();
      }
      if (!is_stable && std::abs(mu) < best_unstable) {
        best_unstable = std::abs(mu);
        unstable_dir_ = re;
        unstable_mu_ = mu.real();
      }
    } else if (mu.imag() > 0) {
      bucket.push_back(v.real().normalized());
      bucket.push_back(v.imag().normalized());
    }
  }
  auto pack = [k](const std::vector<Vector>& cols) {
    Matrix b(k, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = cols[j];
    return b;
  };
  stable_basis_ = pack(stable);
  unstable_basis_ = pack(unstable);
  Matrix full(k, k);
  full << stable_basis_, unstable_basis_;
  anosov_constant_ = condition_number(full);

  // Complex-only stable spectrum: fall back to a real basis vector. The
  // contraction is then only bounded, not an exact eigen-rate.
  if (stable_dir_.size() == 0 && stable_basis_.cols() > 0) {
    stable_dir_ = stable_basis_.col(0).normalized();
    stable_mu_ = 0.0;
  }
  if (unstable_dir_.size() == 0 && unstable_basis_.cols() > 0) {
    unstable_dir_ = unstable_basis_.col(0).normalized();
    unstable_mu_ = 0.0;
  }
}

ToralAutomorphism ToralAutomorphism::cat_map() {
  IntMatrix m(2, 2);
  m << 2, 1, 1, 1;
  return ToralAutomorphism(m);
}

TorusPoint ToralAutomorphism::step(const TorusPoint& x) const {
  return TorusPoint(m_.cast<double>() * x.coords());
}

TorusPoint ToralAutomorphism::step_back(const TorusPoint& x) const {
  return TorusPoint(m_inv_.cast<double>() * x.coords());
}

TorusPoint ToralAutomorphism::apply(const TorusPoint& x, long n) const {
  TorusPoint y = x;
  if (n >= 0) {
    for (long i = 0; i < n; ++i) y = step(y);
  } else {
    for (long i = 0; i < -n; ++i) y = step_back(y);
  }
  return y;
}

RationalPoint ToralAutomorphism::apply(const RationalPoint& p, long n) const {
  std::vector<std::int64_t> num = p.numerators();
  const IntMatrix& m = n >= 0 ? m_ : m_inv_;
  for (long i = 0; i < std::abs(n); ++i) num = step_numerators(m, num, p.denominator());
  return RationalPoint(num, p.denominator());
}

IntMatrix ToralAutomorphism::power(long n) const {
  const IntMatrix& base = n >= 0 ? m_ : m_inv_;
  const Eigen::Index k = dim();
  I128Matrix acc(k, std::vector<i128>(k, 0));
  for (Eigen::Index i = 0; i < k; ++i) acc[i][i] = 1;
  for (long s = 0; s < std::abs(n); ++s) {
    I128Matrix next(k, std::vector<i128>(k, 0));
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) {
        i128 v = 0;
        for (Eigen::Index l = 0; l < k; ++l) v += static_cast<i128>(base(i, l)) * acc[l][j];
        next[i][j] = checked_i64(v);
      }
    acc = std::move(next);
  }
  IntMatrix out(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out(i, j) = static_cast<std::int64_t>(acc[i][j]);
  return out;
}

std::vector<TorusPoint> ToralAutomorphism::orbit(const TorusPoint& x, long n) const {
  std::vector<TorusPoint> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, n)));
  TorusPoint y = x;
  for (long i = 0; i < n; ++i) {
    out.push_back(y);
    y = step(y);
  }
  return out;
}

double ToralAutomorphism::shadowing_constant() const {
  double g = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    const double mod = std::abs(eigenvalues_(i));
    g = std::max(g, mod < 1.0 ? 1.0 / (1.0 - mod) : mod / (mod - 1.0));
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(eigenvectors_);
  const auto s = svd.singularValues();
  return g * s(0) / s(s.size() - 1);
}

// --- Periodic points --------------------------------------------------------

std::int64_t fixed_point_count(const ToralAutomorphism& f, long n) {
  IntMatrix b = f.power(n);
  b -= IntMatrix::Identity(f.dim(), f.dim());
  const i128 det = bareiss_det(to_i128(b));
  return checked_i64(det < 0 ? -det : det);
}

std::vector<PeriodicOrbit> periodic_points(const ToralAutomorphism& f, long n, std::int64_t cap) {
  if (n <= 0) throw DomainError("period must be positive");
  const Eigen::Index k = f.dim();
  IntMatrix b = f.power(n);
  b -= IntMatrix::Identity(k, k);
  const I128Matrix b128 = to_i128(b);
  const i128 det = bareiss_det(b128);
  const i128 count = det < 0 ? -det : det;
  if (count == 0) throw DomainError("f^n has a continuum of fixed points");
  if (count > cap) {
    throw SizeError("periodic point count |det(M^" + std::to_string(n) + " - I)| = " +
                    std::to_string(static_cast<long long>(count)) + " exceeds cap " +
                    std::to_string(cap));
  }
  const std::int64_t den = static_cast<std::int64_t>(count);
  const I128Matrix adj = adjugate(b128);
  const I128Matrix h = column_hermite_form(b128);
  // p = B^{-1} m = adj(B) m / det(B), m ranging over coset representatives of Z^k / B Z^k.
  const i128 sign = det < 0 ? -1 : 1;

  std::vector<std::vector<std::int64_t>> keys;
  keys.reserve(static_cast<std::size_t>(den));
  std::vector<i128> m(k, 0);
  while (true) {
    std::vector<std::int64_t> key(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      i128 s = 0;
      for (Eigen::Index j = 0; j < k; ++j) s += adj[i][j] * m[j];
      key[i] = static_cast<std::int64_t>(floor_mod(sign * s, den));
    }
    keys.push_back(std::move(key));
    Eigen::Index pos = 0;
    while (pos < k) {
      if (++m[pos] < h[pos][pos]) break;
      m[pos] = 0;
      ++pos;
    }
    if (pos == k) break;
  }
  std::sort(keys.begin(), keys.end());

  std::unordered_set<std::vector<std::int64_t>, KeyHash> visited;
  visited.reserve(keys.size() * 2);
  std::vector<PeriodicOrbit> orbits;
  for (const auto& key : keys) {
    if (visited.contains(key)) continue;
    PeriodicOrbit orb;
    std::vector<std::int64_t> cur = key;
    do {
      visited.insert(cur);
      orb.orbit.emplace_back(cur, den);
      cur = step_numerators(f.matrix(), cur, den);
    } while (cur != key);
    orb.period = static_cast<int>(orb.orbit.size());
    orb.point = orb.orbit.front();
    orbits.push_back(std::move(orb));
  }
  std::stable_sort(orbits.begin(), orbits.end(),
                   [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.period < b.period; });
  return orbits;
}

std::vector<PeriodicOrbit> periodic_orbits_up_to(const ToralAutomorphism& f, int max_period,
                                                 std::int64_t cap) {
  std::vector<PeriodicOrbit> out;
  for (int n = 1; n <= max_period; ++n) {
    for (auto& orb : periodic_points(f, n, cap)) {
      if (orb.period == n) out.push_back(std::move(orb));
    }
  }
  return out;
}

// --- Closing ----------------------------------------------------------------

ShadowResult closing_shadow(const ToralAutomorphism& f, const TorusPoint& x, long n,
                            double delta0) {
  if (n <= 0) throw DomainError("closing_shadow needs a positive time");
  const Eigen::Index k = f.dim();
  const IntMatrix mn = f.power(n);
  const Vector lifted = x.coords();
  const Vector image = mn.cast<double>() * lifted;
  const Vector jump = (image - lifted).array().round().matrix();
  const Vector defect = image - lifted - jump;

  ShadowResult out;
  out.defect = defect.norm();
  if (!(out.defect < delta0)) {
    throw PreconditionError("closing_shadow: defect dist(x, f^n x) = " + std::to_string(out.defect) +
                            " is not below delta0 = " + std::to_string(delta0));
  }

  // Split the lifted defect in the real stable/unstable bases.
  Matrix basis(k, k);
  basis << f.stable_basis(), f.unstable_basis();
  const Vector coeff = basis.fullPivLu().solve(defect);
  const Eigen::Index ns = f.stable_basis().cols();
  out.stable_defect = (f.stable_basis() * coeff.head(ns)).norm();
  out.unstable_defect = (f.unstable_basis() * coeff.tail(k - ns)).norm();

  // The shadowing point solves (M^n - I) p = m exactly; p = adj(B) m / det(B).
  IntMatrix b = mn - IntMatrix::Identity(k, k);
  const I128Matrix b128 = to_i128(b);
  const i128 det = bareiss_det(b128);
  const I128Matrix adj = adjugate(b128);
  const i128 den = det < 0 ? -det : det;
  const i128 sign = det < 0 ? -1 : 1;
  std::vector<std::int64_t> num(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    i128 s = 0;
    for (Eigen::Index j = 0; j < k; ++j) s += adj[i][j] * static_cast<i128>(std::llround(jump(j)));
    num[i] = static_cast<std::int64_t>(floor_mod(sign * s, den));
  }
  out.periodic_point = RationalPoint(num, checked_i64(den));

  TorusPoint xi = x;
  RationalPoint pi = out.periodic_point;
  out.distances.reserve(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) {
    out.distances.push_back(torus_dist(xi, pi.to_torus()));
    xi = f.step(xi);
    pi = f.apply(pi, 1);
  }
  const double worst = *std::max_element(out.distances.begin(), out.distances.end());
  out.measured_constant = out.defect > 0.0 ? worst / out.defect : 0.0;
  out.constant_bound = f.shadowing_constant();
  return out;
}

// --- Local leaves -----------------------------------------------------------

TorusPoint stable_neighbor(const ToralAutomorphism& f, const TorusPoint& x, double delta) {
  return TorusPoint(Vector(x.coords() + delta * f.stable_direction()));
}

TorusPoint unstable_neighbor(const ToralAutomorphism& f, const TorusPoint& x, double delta) {
  return TorusPoint(Vector(x.coords() + delta * f.unstable_direction()));
}

TorusPoint stable_neighbor_iterate(const ToralAutomorphism& f, const TorusPoint& x_n, double delta,
                                   long n) {
  if (f.stable_eigenvalue() != 0.0) {
    const double scale = std::pow(f.stable_eigenvalue(), static_cast<double>(n));
    return TorusPoint(Vector(x_n.coords() + delta * scale * f.stable_direction()));
  }
  Vector v = delta * f.stable_direction();
  for (long i = 0; i < n; ++i) v = f.matrix().cast<double>() * v;
  return TorusPoint(Vector(x_n.coords() + v));
}

TorusPoint unstable_neighbor_iterate(const ToralAutomorphism& f, const TorusPoint& x_minus_n,
                                     double delta, long n) {
  if (f.unstable_eigenvalue() != 0.0) {
    const double scale = std::pow(f.unstable_eigenvalue(), -static_cast<double>(n));
    return TorusPoint(Vector(x_minus_n.coords() + delta * scale * f.unstable_direction()));
  }
  Vector v = delta * f.unstable_direction();
  for (long i = 0; i < n; ++i) v = f.inverse_matrix().cast<double>() * v;
  return TorusPoint(Vector(x_minus_n.coords() + v));
}

TorusPoint default_seed(Eigen::Index k) {
  static const double primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  Vector c(k);
  for (Eigen::Index i = 0; i < k; ++i) c(i) = std::sqrt(primes[i % 8]);
  return quantize(TorusPoint(c));
}

// --- Point index ------------------------------------------------------------

TorusPointIndex::TorusPointIndex(const std::vector<TorusPoint>& points, int buckets_per_axis)
    : points_(points), res_(std::max(1, buckets_per_axis)),
      cells_(static_cast<std::size_t>(res_) * static_cast<std::size_t>(res_)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].dim() != 2) throw DomainError("TorusPointIndex supports the 2-torus only");
    cells_[cell_of(points_[i][0], points_[i][1])].push_back(i);
  }
}

std::size_t TorusPointIndex::cell_of(double a, double b) const {
  const int i = std::min(res_ - 1, static_cast<int>(a * res_));
  const int j = std::min(res_ - 1, static_cast<int>(b * res_));
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(res_) + static_cast<std::size_t>(j);
}

std::ptrdiff_t TorusPointIndex::nearest(const TorusPoint& q) const {
  if (points_.empty()) return -1;
  const int ci = std::min(res_ - 1, static_cast<int>(q[0] * res_));
  const int cj = std::min(res_ - 1, static_cast<int>(q[1] * res_));
  const double h = 1.0 / res_;
  double best = std::numeric_limits<double>::infinity();
  std::ptrdiff_t best_idx = -1;
  for (int ring = 0; ring <= res_ / 2 + 1; ++ring) {
    for (int di = -ring; di <= ring; ++di) {
      for (int dj = -ring; dj <= ring; ++dj) {
        if (std::max(std::abs(di), std::abs(dj)) != ring) continue;
        const int i = ((ci + di) % res_ + res_) % res_;
        const int j = ((cj + dj) % res_ + res_) % res_;
        for (std::size_t idx : cells_[static_cast<std::size_t>(i) * res_ + j]) {
          const double d = torus_dist(q, points_[idx]);
          if (d < best) {
            best = d;
            best_idx = static_cast<std::ptrdiff_t>(idx);
          }
        }
      }
    }
    if (best <= ring * h) break;
  }
  return best_idx;
}

std::vector<std::size_t> TorusPointIndex::within(const TorusPoint& q, double r) const {
  std::vector<std::size_t> out;
  const int span = static_cast<int>(std::ceil(r * res_)) + 1;
  if (2 * span + 1 >= res_) {
    for (std::size_t i = 0; i < points_.size(); ++i)
      if (torus_dist(q, points_[i]) <= r) out.push_back(i);
    return out;
  }
  const int ci = std::min(res_ - 1, static_cast<int>(q[0] * res_));
  const int cj = std::min(res_ - 1, static_cast<int>(q[1] * res_));
  for (int di = -span; di <= span; ++di) {
    for (int dj = -span; dj <= span; ++dj) {
      const int i = ((ci + di) % res_ + res_) % res_;
      const int j = ((cj + dj) % res_ + res_) % res_;
      for (std::size_t idx : cells_[static_cast<std::size_t>(i) * res_ + j])
        if (torus_dist(q, points_[idx]) <= r) out.push_back(idx);
    }
  }
  return out;
}

double covering_radius(const std::vector<TorusPoint>& points, int probe_res) {
  if (points.empty()) return std::numeric_limits<double>::infinity();
  const int buckets = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(points.size()) / 2.0)));
  TorusPointIndex index(points, buckets);
  double worst = 0.0;
  for (const auto& q : uniform_grid(2, probe_res)) {
    const auto idx = index.nearest(q);
    worst = std::max(worst, torus_dist(q, points[static_cast<std::size_t>(idx)]));
  }
  return worst;
}

}  // namespace cocycle
