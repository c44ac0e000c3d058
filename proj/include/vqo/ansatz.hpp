#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vqo/errors.hpp"
#include "vqo/pauli.hpp"
#include "vqo/statevector.hpp"

namespace vqo {

/// Parameter vector theta in R^p (radians).
using ParamPoint = std::vector<double>;

/// Coordinate multiset S for a derivative query; entries are 0-based pulse indices.
using CoordinateSet = std::vector<std::size_t>;

inline constexpr std::size_t kMaxDerivativeOrder = 3;

/// A pulse with a fixed angle, applied to |Psi> before the parameterized pulses.
struct FixedPulse {
  ObservableSum generator;
  double angle = 0.0;
};

/// Pulse sequence |theta> = U_p ... U_1 V_f ... V_1 |start>, U_j = exp(-i A_j theta_j / 2).
/// The fixed pulses V are part of the starting state.
class Ansatz {
 public:
  Ansatz() = default;

  Ansatz(std::size_t n, std::string start, std::vector<ObservableSum> pulses, std::vector<FixedPulse> prefix = {})
      : n_(n), start_(std::move(start)), pulses_(std::move(pulses)), prefix_(std::move(prefix)), id_(next_id()) {
    if (start_.size() != n_) throw SizeError("start bitstring length does not match the qubit count");
    for (char c : start_) {
      if (c != '0' && c != '1') throw ArgumentError("start bitstring must contain only '0' and '1'");
    }
    if (pulses_.empty()) throw ArgumentError("ansatz needs at least one pulse");
    for (const auto& a : pulses_) {
      if (a.num_qubits() != n_) throw SizeError("pulse generator qubit count does not match the ansatz");
    }
    for (const auto& f : prefix_) {
      if (f.generator.num_qubits() != n_) throw SizeError("fixed pulse qubit count does not match the ansatz");
    }
  }

  /// Header "n p start=<bits>", then optional "fixed <angle> <coeff> <letters> ..." lines and
  /// p generator lines of "<coeff> <letters>" pairs.
  static Ansatz parse(std::string_view text) {
    std::istringstream lines{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    std::size_t n = 0;
    std::size_t p = 0;
    std::string start;
    bool have_header = false;
    std::vector<ObservableSum> pulses;
    std::vector<FixedPulse> prefix;
    const auto fail = [&](const std::string& what) { throw ParseError("line " + std::to_string(lineno) + ": " + what); };
    while (std::getline(lines, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream in(line);
      if (!have_header) {
        std::string start_tok;
        if (!(in >> n >> p >> start_tok) || start_tok.rfind("start=", 0) != 0) fail("expected header 'n p start=<bits>'");
        start = start_tok.substr(6);
        have_header = true;
        continue;
      }
      std::string head;
      in >> head;
      std::string rest;
      std::getline(in, rest);
      if (head == "fixed") {
        std::istringstream r(rest);
        double angle = 0.0;
        if (!(r >> angle)) fail("fixed pulse needs an angle");
        std::string pairs;
        std::getline(r, pairs);
        auto terms = ObservableSum::parse_pairs(pairs, lineno);
        if (terms.empty()) fail("fixed pulse has no terms");
        prefix.push_back({ObservableSum(n, terms), angle});
        continue;
      }
      auto terms = ObservableSum::parse_pairs(line, lineno);
      for (const auto& t : terms) {
        if (t.second.size() != n) fail("generator qubit count does not match the header");
      }
      pulses.emplace_back(n, terms);
    }
    if (!have_header) throw ParseError("ansatz text has no header");
    if (pulses.size() != p) {
      throw ParseError("header declares " + std::to_string(p) + " pulses but " + std::to_string(pulses.size()) +
                       " were given");
    }
    return Ansatz(n, start, std::move(pulses), std::move(prefix));
  }

  std::string to_text() const {
    std::ostringstream out;
    out.precision(17);
    out << n_ << ' ' << pulses_.size() << " start=" << start_ << '\n';
    const auto pairs = [&](const ObservableSum& a) {
      bool first = true;
      for (const auto& t : a.terms()) {
        out << (first ? "" : " ") << t.coefficient << ' ' << t.string.to_string();
        first = false;
      }
      out << '\n';
    };
    for (const auto& f : prefix_) {
      out << "fixed " << f.angle << ' ';
      pairs(f.generator);
    }
    for (const auto& a : pulses_) pairs(a);
    return out.str();
  }

  std::size_t num_qubits() const { return n_; }
  std::size_t num_params() const { return pulses_.size(); }
  const std::string& start() const { return start_; }
  std::span<const ObservableSum> pulses() const { return pulses_; }
  const ObservableSum& pulse(std::size_t j) const { return pulses_.at(j); }
  std::span<const FixedPulse> prefix() const { return prefix_; }

  /// Identity used for caching derived tables; copies share it.
  std::uint64_t id() const { return id_; }

  std::uint64_t start_index() const {
    std::uint64_t index = 0;
    for (char c : start_) index = (index << 1) | static_cast<std::uint64_t>(c == '1');
    return index;
  }

  void check_point(const ParamPoint& theta) const {
    if (theta.size() != pulses_.size()) {
      throw SizeError("parameter vector has length " + std::to_string(theta.size()) + ", ansatz has " +
                      std::to_string(pulses_.size()) + " pulses");
    }
  }

 private:
  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
  }

  std::size_t n_ = 0;
  std::string start_;
  std::vector<ObservableSum> pulses_;
  std::vector<FixedPulse> prefix_;
  std::uint64_t id_ = 0;
};

/// |theta> on the full register.
inline StateVector prepare(const Ansatz& ansatz, const ParamPoint& theta, std::size_t max_qubits = kDefaultMaxQubits) {
  ansatz.check_point(theta);
  StateVector s = StateVector::basis(ansatz.start(), max_qubits);
  for (const auto& f : ansatz.prefix()) s.apply_pulse(f.generator, f.angle);
  for (std::size_t j = 0; j < ansatz.num_params(); ++j) s.apply_pulse(ansatz.pulse(j), theta[j]);
  return s;
}

/// Support of U_{(j+1):p} Q U_{(j+1):p}^dagger, over-approximated by sweeping the later
/// pulses and absorbing every one whose support meets the running set.
inline std::uint64_t lightcone_mask(const Ansatz& ansatz, std::size_t j, std::uint64_t q_support) {
  if (j >= ansatz.num_params()) throw ArgumentError("pulse index out of range");
  std::uint64_t cone = q_support;
  if (cone == 0) return 0;
  for (std::size_t k = j + 1; k < ansatz.num_params(); ++k) {
    const std::uint64_t s = ansatz.pulse(k).support_mask();
    if (s & cone) cone |= s;
  }
  return cone;
}

inline std::vector<std::size_t> lightcone_support(const Ansatz& ansatz, std::size_t j, const PauliString& q) {
  if (q.size() != ansatz.num_qubits()) throw SizeError("Pauli string qubit count does not match the ansatz");
  return mask_to_indices(lightcone_mask(ansatz, j, q.support_mask()));
}

/// Smallest qubit set containing `seed` that every pulse (fixed or parameterized) either
/// lies inside or avoids entirely. Expectations of operators supported on the set can be
/// simulated on those qubits alone because the start state is a product state.
inline std::uint64_t closed_register(const Ansatz& ansatz, std::uint64_t seed) {
  std::uint64_t reg = seed;
  bool grew = true;
  while (grew) {
    grew = false;
    const auto absorb = [&](std::uint64_t s) {
      if ((s & reg) && (s & ~reg)) {
        reg |= s;
        grew = true;
      }
    };
    for (const auto& f : ansatz.prefix()) absorb(f.generator.support_mask());
    for (const auto& a : ansatz.pulses()) absorb(a.support_mask());
  }
  return reg;
}

namespace detail {

// Relabels the qubits of `p` listed in `qubits` to positions offset, offset+1, ... of a
// `width`-qubit string. Qubits outside the list must be identity.
inline PauliString restrict_to(const PauliString& p, std::span<const std::size_t> qubits, std::size_t offset,
                               std::size_t width) {
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    x |= ((p.x_mask() >> qubits[i]) & 1ULL) << (offset + i);
    z |= ((p.z_mask() >> qubits[i]) & 1ULL) << (offset + i);
  }
  return PauliString(width, x, z, p.phase());
}

inline ObservableSum restrict_to(const ObservableSum& a, std::span<const std::size_t> qubits, std::size_t offset,
                                 std::size_t width) {
  std::vector<std::pair<double, PauliString>> terms;
  terms.reserve(a.size());
  for (const auto& t : a.terms()) terms.emplace_back(t.coefficient, restrict_to(t.string, qubits, offset, width));
  return ObservableSum(width, terms);
}

}  // namespace detail

/// How a term's circuit is read out.
enum class Readout {
  direct,      // <theta|P|theta>
  ancilla_y,   // Im <left|P|right>
  ancilla_x,   // Re <left|P|right>
};

/// One product appearing in the expansion of a derivative. `inserts` lists, in circuit
/// order, the Pauli Q_k^{(j)} placed after pulse j, and whether it goes on the left
/// (bra, ancilla 0) or right (ket, ancilla 1) branch.
struct TermSpec {
  struct Insert {
    std::size_t pulse;
    std::size_t q_index;
    bool right;
  };
  std::vector<Insert> inserts;
  std::size_t observable_term = 0;
  Readout readout = Readout::direct;
};

/// A term compiled to a circuit on its closed register (plus ancilla when needed).
class TermCircuit {
 public:
  TermCircuit(const Ansatz& ansatz, const ObservableSum& h, const TermSpec& spec) : readout_(spec.readout) {
    std::uint64_t seed = h[spec.observable_term].string.support_mask();
    for (const auto& ins : spec.inserts) seed |= ansatz.pulse(ins.pulse)[ins.q_index].string.support_mask();
    const std::uint64_t reg = closed_register(ansatz, seed);
    const auto qubits = mask_to_indices(reg);
    const std::size_t offset = readout_ == Readout::direct ? 0 : 1;
    width_ = qubits.size() + offset;
    if (width_ > kDefaultMaxQubits) throw CapacityError("term circuit exceeds the statevector qubit limit");

    std::uint64_t idx = 0;
    for (std::size_t q : qubits) idx = (idx << 1) | static_cast<std::uint64_t>(ansatz.start()[q] == '1');
    start_ = idx;

    for (const auto& f : ansatz.prefix()) {
      if (f.generator.support_mask() & reg) {
        ops_.push_back({Op::fixed, PulseKernel(detail::restrict_to(f.generator, qubits, offset, width_)), 0, f.angle,
                        {}, false});
      }
    }
    std::size_t next_insert = 0;
    for (std::size_t j = 0; j < ansatz.num_params(); ++j) {
      if (ansatz.pulse(j).support_mask() & reg) {
        ops_.push_back({Op::pulse, PulseKernel(detail::restrict_to(ansatz.pulse(j), qubits, offset, width_)), j, 0.0,
                        {}, false});
      }
      for (; next_insert < spec.inserts.size() && spec.inserts[next_insert].pulse == j; ++next_insert) {
        const auto& ins = spec.inserts[next_insert];
        ops_.push_back({Op::insert, {}, 0, 0.0,
                        detail::restrict_to(ansatz.pulse(j)[ins.q_index].string, qubits, offset, width_), ins.right});
      }
    }
    if (next_insert != spec.inserts.size()) throw ArgumentError("term inserts are not in circuit order");
    observable_ = detail::restrict_to(h[spec.observable_term].string, qubits, offset, width_);
  }

  std::size_t width() const { return width_; }

  /// Exact readout value in [-1, 1] at theta; `scratch` is reused storage.
  double evaluate(const ParamPoint& theta, StateVector& scratch) const {
    scratch.reset(width_, start_);
    if (readout_ != Readout::direct) {
      auto amps = scratch.amplitudes();
      const std::uint64_t half = std::uint64_t{1} << (width_ - 1);
      amps[start_] = 1.0 / std::numbers::sqrt2;
      amps[start_ | half] = 1.0 / std::numbers::sqrt2;
    }
    for (const auto& op : ops_) {
      switch (op.kind) {
        case Op::fixed:
          op.kernel.apply(scratch, op.angle);
          break;
        case Op::pulse:
          op.kernel.apply(scratch, theta[op.param]);
          break;
        case Op::insert:
          scratch.apply_controlled_pauli(0, op.pauli, op.right);
          break;
      }
    }
    switch (readout_) {
      case Readout::direct:
        return scratch.pauli_expectation(observable_).real();
      case Readout::ancilla_y:
        scratch.apply_controlled_pauli(0, observable_, true);
        return scratch.ancilla_y_expectation(0);
      case Readout::ancilla_x:
        scratch.apply_controlled_pauli(0, observable_, true);
        return scratch.ancilla_x_expectation(0);
    }
    return 0.0;
  }

  double evaluate(const ParamPoint& theta) const {
    StateVector scratch;
    return evaluate(theta, scratch);
  }

 private:
  struct Op {
    enum Kind { fixed, pulse, insert } kind;
    PulseKernel kernel;
    std::size_t param;
    double angle;
    PauliString pauli;
    bool right;
  };

  Readout readout_;
  std::size_t width_ = 0;
  std::uint64_t start_ = 0;
  std::vector<Op> ops_;
  PauliString observable_;
};

/// Signed expansion of a derivative query: E[query] = sum_t coefficient_t * value_t, with
/// value_t the readout of term t. `normalization` is sum |coefficient_t| (E, Gamma_j or Z_S).
struct DerivativeExpansion {
  struct Term {
    double coefficient;
    TermSpec spec;
  };
  CoordinateSet coordinates;  // sorted ascending
  std::vector<Term> terms;
  double normalization = 0.0;
};

/// Expands d^r f / d theta_S into Hadamard-test terms.
///
/// With S sorted as k_1 <= ... <= k_r the derivative is
/// (i/2)^r <[A~_{k_1}, [A~_{k_2}, ... [A~_{k_r}, H]]]>, A~_k = U_{(k+1):p} A_k U_{(k+1):p}^dagger.
/// Each choice of Pauli terms (Q for every coordinate, P_l from H) survives only if every
/// nested commutator can be nonzero by light-cone support. Its 2^r orderings pair into
/// 2^{r-1} conjugate pairs, each read out as Re (even r) or Im (odd r) of one inner product.
inline DerivativeExpansion expand_derivative(const Ansatz& ansatz, const ObservableSum& h, CoordinateSet s) {
  if (h.num_qubits() != ansatz.num_qubits()) throw SizeError("observable qubit count does not match the ansatz");
  if (s.size() > kMaxDerivativeOrder) {
    throw UnsupportedOrderError("derivative order " + std::to_string(s.size()) + " exceeds the supported maximum of 3");
  }
  for (std::size_t j : s) {
    if (j >= ansatz.num_params()) throw ArgumentError("coordinate index out of range");
  }
  std::sort(s.begin(), s.end());
  DerivativeExpansion out;
  out.coordinates = s;
  const std::size_t r = s.size();

  if (r == 0) {
    for (std::size_t l = 0; l < h.size(); ++l) {
      out.terms.push_back({h[l].coefficient, TermSpec{{}, l, Readout::direct}});
      out.normalization += h[l].coefficient;
    }
    return out;
  }

  // (i/2)^r times 2 i Im (odd r) or 2 Re (even r), folded into one real prefactor.
  const double sigma = (r == 3) ? 1.0 : -1.0;
  const double prefactor = sigma * std::ldexp(1.0, 1 - static_cast<int>(r));
  const Readout readout = (r % 2 == 1) ? Readout::ancilla_y : Readout::ancilla_x;

  std::vector<std::size_t> choice(r, 0);
  for (std::size_t l = 0; l < h.size(); ++l) {
    std::fill(choice.begin(), choice.end(), 0);
    while (true) {
      // Light-cone pruning from the innermost commutator outwards.
      std::uint64_t acc = h[l].string.support_mask();
      bool alive = true;
      double weight = h[l].coefficient;
      for (std::size_t pos = r; pos-- > 0;) {
        const auto& q = ansatz.pulse(s[pos])[choice[pos]];
        const std::uint64_t cone = lightcone_mask(ansatz, s[pos], q.string.support_mask());
        if ((cone & acc) == 0) {
          alive = false;
          break;
        }
        acc |= cone;
        weight *= q.coefficient;
      }
      if (alive) {
        // Position 0 always on the left; the rest enumerate both sides.
        for (std::uint32_t right_mask = 0; right_mask < (1u << (r - 1)); ++right_mask) {
          TermSpec spec;
          spec.observable_term = l;
          spec.readout = readout;
          std::size_t n_right = 0;
          for (std::size_t pos = 0; pos < r; ++pos) {
            const bool right = pos > 0 && ((right_mask >> (pos - 1)) & 1u);
            n_right += right;
            spec.inserts.push_back({s[pos], choice[pos], right});
          }
          const double c = prefactor * ((n_right % 2) ? -1.0 : 1.0) * weight;
          out.terms.push_back({c, std::move(spec)});
          out.normalization += std::abs(c);
        }
      }
      // Next choice tuple (odometer).
      std::size_t pos = 0;
      while (pos < r) {
        if (++choice[pos] < ansatz.pulse(s[pos]).size()) break;
        choice[pos] = 0;
        ++pos;
      }
      if (pos == r) break;
    }
  }
  return out;
}

/// Exact mean of a query: f (S empty), df/dtheta_j, or a mixed partial up to order 3,
/// evaluated by simulating every term's Hadamard-test circuit.
inline double exact_query_mean(const Ansatz& ansatz, const ObservableSum& h, const ParamPoint& theta,
                               const CoordinateSet& s) {
  ansatz.check_point(theta);
  const auto expansion = expand_derivative(ansatz, h, s);
  StateVector scratch;
  double acc = 0.0;
  for (const auto& t : expansion.terms) acc += t.coefficient * TermCircuit(ansatz, h, t.spec).evaluate(theta, scratch);
  return acc;
}

inline double objective(const Ansatz& ansatz, const ObservableSum& h, const ParamPoint& theta) {
  return exact_query_mean(ansatz, h, theta, {});
}

inline std::vector<double> exact_gradient(const Ansatz& ansatz, const ObservableSum& h, const ParamPoint& theta) {
  std::vector<double> g(ansatz.num_params());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = exact_query_mean(ansatz, h, theta, {j});
  return g;
}

}  // namespace vqo
