#pragma once

// Finite-support, zero-mean latent laws used by the enumeration oracle and
// the Monte Carlo sampler.

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mlmom/error.hpp"
#include "mlmom/number.hpp"

namespace mlmom {

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c)) == 0) return false;
  }
  return true;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) s.remove_suffix(1);
  return s;
}

/// Decimal digit string to Integer. Leading zeros are stripped first because
/// the GMP reader would take them as an octal prefix.
inline Integer decimal_integer(std::string_view digits) {
  while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
  return Integer{std::string(digits)};
}

}  // namespace detail

/// Parses "p/q" or a decimal such as "-1.25" or "2.5e-1" into an exact
/// rational; the decimal is read digit by digit, never through a double.
inline Rational parse_rational(std::string_view text) {
  const std::string_view original = text;
  text = detail::trim(text);
  auto fail = [&]() -> Error {
    return Error(ErrorCode::invalid_distribution,
                 "cannot parse '" + std::string(original) + "' as an exact number");
  };
  if (text.empty()) throw fail();

  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    std::string_view num = detail::trim(text.substr(0, slash));
    const std::string_view den = detail::trim(text.substr(slash + 1));
    bool negative = false;
    if (!num.empty() && (num.front() == '-' || num.front() == '+')) {
      negative = num.front() == '-';
      num.remove_prefix(1);
    }
    if (!detail::all_digits(num) || !detail::all_digits(den)) throw fail();
    const Integer d = detail::decimal_integer(den);
    if (d == 0) throw fail();
    Rational q(detail::decimal_integer(num), d);
    return negative ? Rational(-q) : q;
  }

  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  long long exponent = 0;
  if (const auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = text.substr(e + 1);
    text = text.substr(0, e);
    bool exp_negative = false;
    if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
      exp_negative = exp_text.front() == '-';
      exp_text.remove_prefix(1);
    }
    if (!detail::all_digits(exp_text) || exp_text.size() > 6) throw fail();
    exponent = std::stoll(std::string(exp_text));
    if (exp_negative) exponent = -exponent;
  }
  std::string digits;
  std::string_view int_part = text;
  std::string_view frac_part;
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    int_part = text.substr(0, dot);
    frac_part = text.substr(dot + 1);
  }
  if (int_part.empty() && frac_part.empty()) throw fail();
  if (!int_part.empty() && !detail::all_digits(int_part)) throw fail();
  if (!frac_part.empty() && !detail::all_digits(frac_part)) throw fail();
  digits.append(int_part);
  digits.append(frac_part);
  exponent -= static_cast<long long>(frac_part.size());

  Rational q{detail::decimal_integer(digits)};
  const Integer ten_power = boost::multiprecision::pow(
      Integer(10), static_cast<unsigned>(exponent < 0 ? -exponent : exponent));
  q = exponent < 0 ? Rational(q / Rational(ten_power)) : Rational(q * Rational(ten_power));
  return negative ? Rational(-q) : q;
}

struct Atom {
  Rational value;
  Rational probability;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Invariants: probabilities positive and summing to exactly 1, mean exactly
/// 0, and at least two atoms unless the law is the point mass at 0.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) {
      throw Error(ErrorCode::invalid_distribution, "distribution has no atoms");
    }
    Rational total(0);
    Rational mean(0);
    for (const auto& a : atoms_) {
      if (a.probability <= 0) {
        throw Error(ErrorCode::invalid_distribution,
                    "probability " + mlmom::to_string(a.probability) + " is not positive");
      }
      total += a.probability;
      mean += a.probability * a.value;
    }
    if (total != 1) {
      throw Error(ErrorCode::invalid_distribution,
                  "probabilities sum to " + mlmom::to_string(total) + ", not 1");
    }
    if (mean != 0) {
      throw Error(ErrorCode::invalid_distribution,
                  "mean is " + mlmom::to_string(mean) + ", must be exactly 0");
    }
    if (atoms_.size() == 1 && atoms_.front().value != 0) {
      throw Error(ErrorCode::invalid_distribution, "a single atom must sit at 0");
    }
    Rational running(0);
    cumulative_.reserve(atoms_.size());
    for (const auto& a : atoms_) {
      running += a.probability;
      cumulative_.push_back(to_double(running));
      values_.push_back(to_double(a.value));
    }
    cumulative_.back() = 1.0;
  }

  static DiscreteDistribution point_mass_zero() {
    return DiscreteDistribution({{Rational(0), Rational(1)}});
  }

  /// Symmetric two-point law on {-1, +1}.
  static DiscreteDistribution rademacher() {
    return DiscreteDistribution({{Rational(1), Rational(1, 2)}, {Rational(-1), Rational(1, 2)}});
  }

  /// "v1:p1,v2:p2,..." with each number a decimal or p/q.
  static DiscreteDistribution parse(std::string_view text) {
    std::vector<Atom> atoms;
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t comma = text.find(',', start);
      const std::string_view item =
          text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      const std::size_t colon = item.find(':');
      if (colon == std::string_view::npos) {
        throw Error(ErrorCode::invalid_distribution,
                    "atom '" + std::string(item) + "' is not of the form value:probability");
      }
      atoms.push_back({parse_rational(item.substr(0, colon)), parse_rational(item.substr(colon + 1))});
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return DiscreteDistribution(std::move(atoms));
  }

  [[nodiscard]] const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }

  /// Inverse CDF over atoms in listed order; unit must lie in [0, 1).
  [[nodiscard]] std::size_t sample_index(double unit) const noexcept {
    for (std::size_t s = 0; s + 1 < cumulative_.size(); ++s) {
      if (unit < cumulative_[s]) return s;
    }
    return cumulative_.size() - 1;
  }

  [[nodiscard]] double value_as_double(std::size_t s) const noexcept { return values_[s]; }

  [[nodiscard]] std::string to_string() const {
    std::string out;
    for (const auto& a : atoms_) {
      if (!out.empty()) out += ',';
      out += mlmom::to_string(a.value) + ':' + mlmom::to_string(a.probability);
    }
    return out;
  }

  friend bool operator==(const DiscreteDistribution& a, const DiscreteDistribution& b) {
    return a.atoms_ == b.atoms_;
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  std::vector<double> values_;
};

}  // namespace mlmom
