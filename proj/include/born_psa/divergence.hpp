#pragma once

#include "born_psa/types.hpp"

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

namespace born_psa {

enum class DivergenceTag { Variational, QuadraticVariational, JeffreyJ, JensenShannon, Hellinger, Bach };

/// One of the symmetric divergences driving a PSA update; b is used by Bach only.
struct DivergenceKind {
  static constexpr double kDefaultBachExponent = 0.025;

  DivergenceTag tag = DivergenceTag::QuadraticVariational;
  double b = kDefaultBachExponent;

  static DivergenceKind variational() { return {DivergenceTag::Variational}; }
  static DivergenceKind quadratic_variational() { return {DivergenceTag::QuadraticVariational}; }
  static DivergenceKind jeffrey() { return {DivergenceTag::JeffreyJ}; }
  static DivergenceKind jensen_shannon() { return {DivergenceTag::JensenShannon}; }
  static DivergenceKind hellinger() { return {DivergenceTag::Hellinger}; }
  static DivergenceKind bach(double b = kDefaultBachExponent) {
    if (!(b > 0.0 && b <= 1.0)) throw PreconditionError("bach exponent must lie in (0, 1]");
    return {DivergenceTag::Bach, b};
  }

  bool operator==(const DivergenceKind& o) const {
    return tag == o.tag && (tag != DivergenceTag::Bach || b == o.b);
  }
};

/// Shortest round-trip decimal text for a double.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// `variational | qvar | jeffrey | jensen-shannon | hellinger | bach:<b>`
inline std::string to_string(const DivergenceKind& k) {
  switch (k.tag) {
    case DivergenceTag::Variational: return "variational";
    case DivergenceTag::QuadraticVariational: return "qvar";
    case DivergenceTag::JeffreyJ: return "jeffrey";
    case DivergenceTag::JensenShannon: return "jensen-shannon";
    case DivergenceTag::Hellinger: return "hellinger";
    case DivergenceTag::Bach: return "bach:" + format_number(k.b);
  }
  return "?";
}

inline DivergenceKind parse_divergence(std::string_view text) {
  if (text == "variational") return DivergenceKind::variational();
  if (text == "qvar") return DivergenceKind::quadratic_variational();
  if (text == "jeffrey") return DivergenceKind::jeffrey();
  if (text == "jensen-shannon") return DivergenceKind::jensen_shannon();
  if (text == "hellinger") return DivergenceKind::hellinger();
  if (text == "bach") return DivergenceKind::bach();
  if (text.starts_with("bach:")) {
    const auto num = text.substr(5);
    double b = 0;
    auto res = std::from_chars(num.data(), num.data() + num.size(), b);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size()) {
      throw PreconditionError("bad bach exponent in '" + std::string(text) + "'");
    }
    return DivergenceKind::bach(b);
  }
  throw PreconditionError("unknown divergence '" + std::string(text) + "'");
}

/// Per-sample divergence term between input probability p and joint probability q.
template <typename Scalar>
Scalar pointwise_divergence(Scalar p, Scalar q, const DivergenceKind& kind) {
  if (p < Scalar(0) || q < Scalar(0)) throw DomainError("divergence arguments must be nonnegative");
  using std::log;
  using std::pow;
  using std::sqrt;
  switch (kind.tag) {
    case DivergenceTag::Variational:
      return std::abs(p - q);
    case DivergenceTag::QuadraticVariational:
      return (p - q) * (p - q);
    case DivergenceTag::JeffreyJ:
      if (!(p > Scalar(0) && q > Scalar(0))) throw DomainError("Jeffrey divergence needs p, q > 0");
      return (p - q) * log(p / q);
    case DivergenceTag::JensenShannon: {
      if (!(p > Scalar(0) && q > Scalar(0))) throw DomainError("Jensen-Shannon divergence needs p, q > 0");
      const Scalar m = p + q;
      const Scalar v = Scalar(0.5) * (p * log(Scalar(2) * p / m) + q * log(Scalar(2) * q / m));
      return v < Scalar(0) ? Scalar(0) : v;
    }
    case DivergenceTag::Hellinger: {
      const Scalar d = sqrt(p) - sqrt(q);
      return Scalar(0.5) * d * d;
    }
    case DivergenceTag::Bach: {
      const Scalar b = static_cast<Scalar>(kind.b);
      const Scalar d = pow(p, b) - pow(q, b);
      return d * d;
    }
  }
  return Scalar(0);
}

/// Scalar multiplying the Hebbian direction in a divergence-driven PSA update.
///
/// p_star = x^T x, q_star = y^T y. Positive when q_star < p_star (output energy
/// deficit grows the weights), zero on the energy-matching manifold. Constant
/// factors of the exact derivatives are absorbed into the learning rate.
template <typename Scalar>
Scalar modulation_factor(Scalar p_star, Scalar q_star, const DivergenceKind& kind) {
  if (!(p_star > Scalar(0))) throw DomainError("degenerate input energy");
  if (q_star < Scalar(0)) throw DomainError("negative output energy");
  using std::log;
  using std::pow;
  using std::sqrt;
  switch (kind.tag) {
    case DivergenceTag::Variational:
      return static_cast<Scalar>((q_star < p_star) - (p_star < q_star));
    case DivergenceTag::QuadraticVariational:
      return p_star - q_star;
    case DivergenceTag::JeffreyJ:
      if (!(q_star > Scalar(0))) throw DomainError("degenerate output energy");
      return log(p_star / q_star) + (p_star - q_star) / p_star;
    case DivergenceTag::JensenShannon:
      return log(Scalar(2) * p_star / (q_star + p_star));
    case DivergenceTag::Hellinger:
      return (sqrt(p_star) - sqrt(q_star)) / sqrt(p_star);
    case DivergenceTag::Bach: {
      if (!(q_star > Scalar(0))) throw DomainError("degenerate output energy");
      const Scalar b = static_cast<Scalar>(kind.b);
      return (pow(p_star, b) - pow(q_star, b)) / pow(q_star, Scalar(1) - b);
    }
  }
  return Scalar(0);
}

/// Kinds whose modulation factor is undefined at zero output energy.
inline bool requires_positive_output(const DivergenceKind& kind) {
  return kind.tag == DivergenceTag::JeffreyJ || kind.tag == DivergenceTag::Bach;
}

}  // namespace born_psa
