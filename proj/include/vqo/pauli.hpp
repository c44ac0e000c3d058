#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vqo/errors.hpp"

namespace vqo {

inline constexpr std::size_t kMaxPauliQubits = 64;

/// Unit phase i^k, stored as k mod 4.
enum class Phase : std::uint8_t { plus_one = 0, plus_i = 1, minus_one = 2, minus_i = 3 };

inline std::complex<double> phase_value(Phase p) {
  switch (p) {
    case Phase::plus_one: return {1.0, 0.0};
    case Phase::plus_i: return {0.0, 1.0};
    case Phase::minus_one: return {-1.0, 0.0};
    case Phase::minus_i: return {0.0, -1.0};
  }
  return {1.0, 0.0};
}

inline Phase phase_from_exponent(int k) { return static_cast<Phase>(((k % 4) + 4) % 4); }

/// n-qubit Pauli operator i^k * P_0 (x) ... (x) P_{n-1}.
///
/// Letters are stored as an (x, z) bit pair per qubit with bit q of each mask
/// describing qubit q: I=(0,0), X=(1,0), Z=(0,1), Y=(1,1). The Y letter is the
/// Hermitian Pauli Y, so a string with phase +1 or -1 is Hermitian.
class PauliString {
 public:
  PauliString() = default;

  /// Identity on n qubits.
  explicit PauliString(std::size_t n) : n_(n) {
    if (n > kMaxPauliQubits) throw CapacityError("PauliString supports at most 64 qubits");
  }

  PauliString(std::size_t n, std::uint64_t x_mask, std::uint64_t z_mask, Phase phase = Phase::plus_one)
      : n_(n), x_(x_mask), z_(z_mask), phase_(phase) {
    if (n > kMaxPauliQubits) throw CapacityError("PauliString supports at most 64 qubits");
    const std::uint64_t valid = n == 64 ? ~0ULL : ((1ULL << n) - 1);
    if ((x_ | z_) & ~valid) throw ArgumentError("Pauli mask has bits beyond the qubit count");
  }

  /// Parses letters such as "XIZ", optionally prefixed by "+", "-", "i", "+i" or "-i".
  static PauliString from_letters(std::string_view text) {
    Phase phase = Phase::plus_one;
    if (text.starts_with("-i")) {
      phase = Phase::minus_i;
      text.remove_prefix(2);
    } else if (text.starts_with("+i")) {
      phase = Phase::plus_i;
      text.remove_prefix(2);
    } else if (text.starts_with("i")) {
      phase = Phase::plus_i;
      text.remove_prefix(1);
    } else if (text.starts_with("-")) {
      phase = Phase::minus_one;
      text.remove_prefix(1);
    } else if (text.starts_with("+")) {
      text.remove_prefix(1);
    }
    if (text.empty()) throw ParseError("empty Pauli string");
    PauliString out(text.size());
    for (std::size_t q = 0; q < text.size(); ++q) {
      switch (text[q]) {
        case 'I': break;
        case 'X': out.x_ |= 1ULL << q; break;
        case 'Y': out.x_ |= 1ULL << q; out.z_ |= 1ULL << q; break;
        case 'Z': out.z_ |= 1ULL << q; break;
        default: throw ParseError(std::string("invalid Pauli letter '") + text[q] + "'");
      }
    }
    out.phase_ = phase;
    return out;
  }

  /// Single-qubit letter `letter` on `qubit`, identity elsewhere.
  static PauliString single(std::size_t n, std::size_t qubit, char letter) {
    if (qubit >= n) throw ArgumentError("qubit index out of range");
    PauliString out(n);
    const std::uint64_t bit = 1ULL << qubit;
    switch (letter) {
      case 'I': break;
      case 'X': out.x_ = bit; break;
      case 'Y': out.x_ = bit; out.z_ = bit; break;
      case 'Z': out.z_ = bit; break;
      default: throw ArgumentError(std::string("invalid Pauli letter '") + letter + "'");
    }
    return out;
  }

  std::size_t size() const { return n_; }
  std::uint64_t x_mask() const { return x_; }
  std::uint64_t z_mask() const { return z_; }
  Phase phase() const { return phase_; }
  std::uint64_t support_mask() const { return x_ | z_; }
  bool is_identity() const { return (x_ | z_) == 0; }
  bool is_hermitian() const { return phase_ == Phase::plus_one || phase_ == Phase::minus_one; }

  /// +1 or -1 for a Hermitian string.
  double sign() const {
    if (!is_hermitian()) throw ArgumentError("Pauli string phase is not real");
    return phase_ == Phase::plus_one ? 1.0 : -1.0;
  }

  char letter(std::size_t q) const {
    const bool x = (x_ >> q) & 1ULL;
    const bool z = (z_ >> q) & 1ULL;
    return x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
  }

  PauliString with_phase(Phase p) const { return PauliString(n_, x_, z_, p); }
  PauliString unsigned_letters() const { return with_phase(Phase::plus_one); }

  /// Letters only, e.g. "XIZ".
  std::string letters() const {
    std::string s(n_, 'I');
    for (std::size_t q = 0; q < n_; ++q) s[q] = letter(q);
    return s;
  }

  std::string to_string() const {
    static constexpr const char* prefix[] = {"", "i", "-", "-i"};
    return prefix[static_cast<int>(phase_)] + letters();
  }

  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  std::size_t n_ = 0;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
  Phase phase_ = Phase::plus_one;
};

/// Product a*b with the phase tracked exactly.
inline PauliString mul(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size()) throw SizeError("Pauli product of strings with different qubit counts");
  // With Y = i X Z every string is i^(k + #Y) X^x Z^z, and Z^z1 X^x2 = (-1)^|z1&x2| X^x2 Z^z1.
  const std::uint64_t x = a.x_mask() ^ b.x_mask();
  const std::uint64_t z = a.z_mask() ^ b.z_mask();
  int k = static_cast<int>(a.phase()) + static_cast<int>(b.phase());
  k += std::popcount(a.x_mask() & a.z_mask()) + std::popcount(b.x_mask() & b.z_mask());
  k += 2 * std::popcount(a.z_mask() & b.x_mask());
  k -= std::popcount(x & z);
  return PauliString(a.size(), x, z, phase_from_exponent(k));
}

inline PauliString operator*(const PauliString& a, const PauliString& b) { return mul(a, b); }

/// True iff ab = -ba.
inline bool anticommutes(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size()) throw SizeError("commutation check of strings with different qubit counts");
  const std::uint64_t symplectic = (a.x_mask() & b.z_mask()) ^ (a.z_mask() & b.x_mask());
  return (std::popcount(symplectic) & 1) != 0;
}

/// Qubits on which the string acts nontrivially, ascending.
inline std::vector<std::size_t> support(const PauliString& a) {
  std::vector<std::size_t> out;
  for (std::uint64_t m = a.support_mask(); m != 0; m &= m - 1) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
  }
  return out;
}

inline std::vector<std::size_t> mask_to_indices(std::uint64_t m) {
  std::vector<std::size_t> out;
  for (; m != 0; m &= m - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
  return out;
}

struct PauliTerm {
  double coefficient;  // > 0
  PauliString string;  // phase +1 or -1
};

/// Real-weighted sum of Hermitian Pauli strings, sum_i alpha_i P_i with every
/// alpha_i > 0 (signs folded into the strings' phases).
///
/// Construction merges terms with equal letters (coefficients added, in
/// first-appearance order) and drops terms that cancel exactly.
class ObservableSum {
 public:
  ObservableSum() = default;

  ObservableSum(std::size_t n, std::span<const std::pair<double, PauliString>> signed_terms) : n_(n) {
    if (n > kMaxPauliQubits) throw CapacityError("ObservableSum supports at most 64 qubits");
    std::vector<std::pair<PauliString, double>> merged;
    for (const auto& [c, s] : signed_terms) {
      if (s.size() != n) throw SizeError("term qubit count does not match the observable");
      if (!std::isfinite(c)) throw ArgumentError("non-finite coefficient");
      if (!s.is_hermitian()) throw ArgumentError("term is not Hermitian (phase must be +1 or -1)");
      const double value = c * s.sign();
      const PauliString key = s.unsigned_letters();
      bool found = false;
      for (auto& [k, v] : merged) {
        if (k == key) {
          v += value;
          found = true;
          break;
        }
      }
      if (!found) merged.emplace_back(key, value);
    }
    for (const auto& [k, v] : merged) {
      if (v == 0.0) continue;
      terms_.push_back({std::abs(v), k.with_phase(v > 0 ? Phase::plus_one : Phase::minus_one)});
      normalization_ += std::abs(v);
      support_ |= k.support_mask();
    }
    if (terms_.empty() || !(normalization_ > 0.0) || !std::isfinite(normalization_)) {
      throw ArgumentError("observable must have a finite, positive coefficient sum");
    }
  }

  ObservableSum(std::size_t n, std::initializer_list<std::pair<double, PauliString>> signed_terms)
      : ObservableSum(n, std::span<const std::pair<double, PauliString>>(signed_terms.begin(), signed_terms.size())) {}

  ObservableSum(std::size_t n, const std::vector<std::pair<double, PauliString>>& signed_terms)
      : ObservableSum(n, std::span<const std::pair<double, PauliString>>(signed_terms)) {}

  /// Single term c * P.
  static ObservableSum single(double c, const PauliString& p) {
    const std::pair<double, PauliString> t{c, p};
    return ObservableSum(p.size(), std::span<const std::pair<double, PauliString>>(&t, 1));
  }

  /// Parses one term per line, "<coeff> <letters>" (e.g. "0.5 XIZ"). The
  /// coefficient must be strictly positive; a leading '-' on the letters folds
  /// a sign into the string. Blank lines and lines starting with '#' are skipped.
  static ObservableSum parse(std::string_view text) {
    std::vector<std::pair<double, PauliString>> terms;
    std::size_t n = 0;
    std::istringstream lines{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      auto parsed = parse_pairs(line, lineno);
      for (auto& t : parsed) {
        if (terms.empty() && n == 0) n = t.second.size();
        if (t.second.size() != n) {
          throw ParseError("line " + std::to_string(lineno) + ": inconsistent qubit count");
        }
        terms.push_back(std::move(t));
      }
    }
    if (terms.empty()) throw ParseError("observable text has no terms");
    return ObservableSum(n, terms);
  }

  /// Parses whitespace-separated "<coeff> <letters>" pairs from one line.
  static std::vector<std::pair<double, PauliString>> parse_pairs(std::string_view line, std::size_t lineno = 0) {
    std::istringstream in{std::string(line)};
    std::vector<std::pair<double, PauliString>> out;
    std::string coeff_tok;
    std::string letters_tok;
    const auto where = [&] { return lineno ? "line " + std::to_string(lineno) + ": " : std::string(); };
    while (in >> coeff_tok) {
      if (!(in >> letters_tok)) throw ParseError(where() + "coefficient without Pauli letters");
      double c = 0.0;
      try {
        std::size_t used = 0;
        c = std::stod(coeff_tok, &used);
        if (used != coeff_tok.size()) throw ParseError(where() + "malformed coefficient '" + coeff_tok + "'");
      } catch (const std::logic_error&) {
        throw ParseError(where() + "malformed coefficient '" + coeff_tok + "'");
      }
      if (!(c > 0.0) || !std::isfinite(c)) {
        throw ParseError(where() + "coefficients must be strictly positive");
      }
      out.emplace_back(c, PauliString::from_letters(letters_tok));
    }
    return out;
  }

  std::size_t num_qubits() const { return n_; }
  std::span<const PauliTerm> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  const PauliTerm& operator[](std::size_t i) const { return terms_[i]; }

  /// E = sum of coefficients.
  double normalization() const { return normalization_; }
  std::uint64_t support_mask() const { return support_; }

  std::string to_text() const {
    std::ostringstream out;
    out.precision(17);
    for (const auto& t : terms_) out << t.coefficient << ' ' << t.string.to_string() << '\n';
    return out.str();
  }

 private:
  std::size_t n_ = 0;
  std::vector<PauliTerm> terms_;
  double normalization_ = 0.0;
  std::uint64_t support_ = 0;
};

}  // namespace vqo
