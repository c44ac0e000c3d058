#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vqo/errors.hpp"
#include "vqo/pauli.hpp"

namespace vqo {

using Complex = std::complex<double>;

inline constexpr std::size_t kDefaultMaxQubits = 14;
inline constexpr std::size_t kMaxDensePulseQubits = 10;

/// Shared numerical tolerances.
namespace tolerance {
inline constexpr double unitarity = 1e-10;
inline constexpr double imaginary_residue = 1e-10;
}  // namespace tolerance

namespace detail {

inline Complex i_power(int k) { return phase_value(phase_from_exponent(k)); }

/// Maps a qubit mask (bit q = qubit q) to an amplitude-index mask where qubit 0
/// is the most significant of n bits.
inline std::uint64_t amplitude_mask(std::uint64_t qubit_mask, std::size_t n) {
  std::uint64_t out = 0;
  for (std::uint64_t m = qubit_mask; m != 0; m &= m - 1) {
    const auto q = static_cast<std::size_t>(std::countr_zero(m));
    out |= 1ULL << (n - 1 - q);
  }
  return out;
}

/// A Pauli string in amplitude-index form: P|b> = base * (-1)^|b & z| |b ^ x>.
struct PauliAction {
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  Complex base{1.0, 0.0};

  PauliAction(const PauliString& p, std::size_t n)
      : x(amplitude_mask(p.x_mask(), n)), z(amplitude_mask(p.z_mask(), n)),
        base(i_power(static_cast<int>(p.phase()) + std::popcount(p.x_mask() & p.z_mask()))) {}

  double sign(std::uint64_t b) const { return (std::popcount(b & z) & 1) ? -1.0 : 1.0; }
};

}  // namespace detail

/// Dense matrix of a Pauli string on its own n qubits (qubit 0 most significant).
inline Eigen::MatrixXcd dense_matrix(const PauliString& p) {
  const std::size_t n = p.size();
  const std::size_t dim = std::size_t{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const detail::PauliAction act(p, n);
  for (std::uint64_t b = 0; b < dim; ++b) {
    m(static_cast<Eigen::Index>(b ^ act.x), static_cast<Eigen::Index>(b)) = act.base * act.sign(b);
  }
  return m;
}

inline Eigen::MatrixXcd dense_matrix(const ObservableSum& h) {
  const std::size_t dim = std::size_t{1} << h.num_qubits();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& t : h.terms()) m += t.coefficient * dense_matrix(t.string);
  return m;
}

/// Exponential e^{-i A angle / 2} of a Hermitian Pauli sum, acting only on the
/// qubits in supp(A). Single-term generators use the closed form
/// cos(angle/2) I - i sin(angle/2) P; others go through an eigendecomposition
/// of A restricted to its support, computed once at construction.
class PulseKernel {
 public:
  PulseKernel() = default;

  explicit PulseKernel(const ObservableSum& a) : n_(a.num_qubits()) {
    if (a.size() == 1) {
      const auto& t = a[0];
      single_ = t.string.unsigned_letters();
      scale_ = t.coefficient * t.string.sign();
      return;
    }
    dense_ = true;
    support_ = mask_to_indices(a.support_mask());
    const std::size_t k = support_.size();
    if (k > kMaxDensePulseQubits) {
      throw CapacityError("multi-term pulse acts on more than 10 qubits; dense exponential unavailable");
    }
    // Restrict every term to the support, preserving qubit order.
    std::vector<std::pair<double, PauliString>> local;
    local.reserve(a.size());
    for (const auto& t : a.terms()) {
      std::uint64_t x = 0;
      std::uint64_t z = 0;
      for (std::size_t i = 0; i < k; ++i) {
        x |= ((t.string.x_mask() >> support_[i]) & 1ULL) << i;
        z |= ((t.string.z_mask() >> support_[i]) & 1ULL) << i;
      }
      local.emplace_back(t.coefficient * t.string.sign(), PauliString(k, x, z));
    }
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(Eigen::Index{1} << k, Eigen::Index{1} << k);
    for (const auto& [c, s] : local) m += c * dense_matrix(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
    if (solver.info() != Eigen::Success) throw NumericError("pulse eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
  }

  std::size_t num_qubits() const { return n_; }
  bool is_dense() const { return dense_; }

  /// Unitary on the support register for the given angle (dense kernels only).
  Eigen::MatrixXcd local_unitary(double angle) const {
    Eigen::VectorXcd phases(eigenvalues_.size());
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
      phases(i) = std::exp(Complex(0.0, -0.5 * angle * eigenvalues_(i)));
    }
    return eigenvectors_ * phases.asDiagonal() * eigenvectors_.adjoint();
  }

  template <class State>
  void apply(State& s, double angle) const;

  const PauliString& single_string() const { return single_; }
  double single_scale() const { return scale_; }
  std::span<const std::size_t> support() const { return support_; }

 private:
  std::size_t n_ = 0;
  bool dense_ = false;
  PauliString single_;
  double scale_ = 0.0;
  std::vector<std::size_t> support_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
};

/// Dense statevector on n qubits. Qubit 0 is the most significant bit of the
/// amplitude index, so basis string "10" is amplitude index 2.
class StateVector {
 public:
  StateVector() = default;

  /// |0...0> on n qubits.
  explicit StateVector(std::size_t n, std::size_t max_qubits = kDefaultMaxQubits) : n_(n) {
    if (n > max_qubits) {
      throw CapacityError("statevector of " + std::to_string(n) + " qubits exceeds the configured maximum of " +
                          std::to_string(max_qubits));
    }
    amplitudes_.assign(std::size_t{1} << n, Complex{});
    amplitudes_[0] = 1.0;
  }

  static StateVector basis(std::string_view bits, std::size_t max_qubits = kDefaultMaxQubits) {
    StateVector s(bits.size(), max_qubits);
    std::uint64_t index = 0;
    for (char c : bits) {
      if (c != '0' && c != '1') throw ArgumentError("basis string must contain only '0' and '1'");
      index = (index << 1) | static_cast<std::uint64_t>(c == '1');
    }
    s.amplitudes_[0] = 0.0;
    s.amplitudes_[index] = 1.0;
    return s;
  }

  /// Resets to the basis state whose amplitude index is `index`, reusing storage.
  void reset(std::size_t n, std::uint64_t index) {
    n_ = n;
    amplitudes_.assign(std::size_t{1} << n, Complex{});
    amplitudes_[index] = 1.0;
  }

  std::size_t num_qubits() const { return n_; }
  std::size_t dimension() const { return amplitudes_.size(); }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  std::span<Complex> amplitudes() { return amplitudes_; }
  Complex amplitude(std::uint64_t index) const { return amplitudes_.at(index); }

  double norm_squared() const {
    double acc = 0.0;
    for (const auto& a : amplitudes_) acc += std::norm(a);
    return acc;
  }

  /// s <- P s.
  void apply_pauli(const PauliString& p) {
    check_size(p);
    const detail::PauliAction act(p, n_);
    if (act.x == 0) {
      for (std::uint64_t b = 0; b < amplitudes_.size(); ++b) amplitudes_[b] *= act.base * act.sign(b);
      return;
    }
    for (std::uint64_t b = 0; b < amplitudes_.size(); ++b) {
      const std::uint64_t b2 = b ^ act.x;
      if (b2 < b) continue;
      const Complex a0 = amplitudes_[b];
      const Complex a1 = amplitudes_[b2];
      amplitudes_[b] = act.base * act.sign(b2) * a1;
      amplitudes_[b2] = act.base * act.sign(b) * a0;
    }
  }

  /// s <- exp(-i P angle / 2) s for a string with phase +1.
  void apply_pauli_rotation(const PauliString& p, double angle) {
    if (p.phase() != Phase::plus_one) throw ArgumentError("rotation generator must have phase +1");
    rotate(p, angle);
  }

  /// s <- exp(-i A angle / 2) s.
  void apply_pulse(const ObservableSum& a, double angle) {
    if (a.num_qubits() != n_) throw SizeError("pulse generator qubit count does not match the state");
    PulseKernel(a).apply(*this, angle);
  }

  /// Applies P on the branch where `control` equals `control_value`. P is an
  /// n-qubit string that must act trivially on the control qubit.
  void apply_controlled_pauli(std::size_t control, const PauliString& p, bool control_value = true) {
    check_size(p);
    if (control >= n_) throw ArgumentError("control qubit out of range");
    if ((p.support_mask() >> control) & 1ULL) throw ArgumentError("controlled Pauli acts on its own control qubit");
    const detail::PauliAction act(p, n_);
    const std::uint64_t cbit = 1ULL << (n_ - 1 - control);
    const std::uint64_t want = control_value ? cbit : 0;
    for (std::uint64_t b = 0; b < amplitudes_.size(); ++b) {
      if ((b & cbit) != want) continue;
      const std::uint64_t b2 = b ^ act.x;
      if (b2 < b) continue;
      if (b2 == b) {
        amplitudes_[b] *= act.base * act.sign(b);
        continue;
      }
      const Complex a0 = amplitudes_[b];
      const Complex a1 = amplitudes_[b2];
      amplitudes_[b] = act.base * act.sign(b2) * a1;
      amplitudes_[b2] = act.base * act.sign(b) * a0;
    }
  }

  /// <s|P|s> (complex in general; real for Hermitian P).
  Complex pauli_expectation(const PauliString& p) const {
    check_size(p);
    const detail::PauliAction act(p, n_);
    Complex acc{};
    for (std::uint64_t b = 0; b < amplitudes_.size(); ++b) {
      acc += std::conj(amplitudes_[b ^ act.x]) * act.sign(b) * amplitudes_[b];
    }
    return act.base * acc;
  }

  /// sum_i alpha_i <s|P_i|s>; per-term imaginary residue is discarded.
  double expectation(const ObservableSum& h) const {
    if (h.num_qubits() != n_) throw SizeError("observable qubit count does not match the state");
    double acc = 0.0;
    for (const auto& t : h.terms()) acc += t.coefficient * pauli_expectation(t.string).real();
    return acc;
  }

  /// <Y> on one qubit: 2 Im sum conj(a_0) a_1 over pairs differing in that qubit.
  double ancilla_y_expectation(std::size_t ancilla) const { return 2.0 * ancilla_overlap(ancilla).imag(); }

  /// <X> on one qubit.
  double ancilla_x_expectation(std::size_t ancilla) const { return 2.0 * ancilla_overlap(ancilla).real(); }

 private:
  friend class PulseKernel;

  void check_size(const PauliString& p) const {
    if (p.size() != n_) throw SizeError("Pauli string qubit count does not match the state");
  }

  Complex ancilla_overlap(std::size_t ancilla) const {
    if (ancilla >= n_) throw ArgumentError("ancilla index out of range");
    const std::uint64_t bit = 1ULL << (n_ - 1 - ancilla);
    Complex acc{};
    for (std::uint64_t b = 0; b < amplitudes_.size(); ++b) {
      if (b & bit) continue;
      acc += std::conj(amplitudes_[b]) * amplitudes_[b | bit];
    }
    return acc;
  }

  // exp(-i angle/2 P) for any Hermitian-letter string; the phase of p is honoured.
  void rotate(const PauliString& p, double angle) {
    check_size(p);
    if (angle == 0.0) return;
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    const detail::PauliAction act(p, n_);
    const Complex k = Complex(0.0, -s) * act.base;
    if (act.x == 0) {
      for (std::uint64_t b = 0; b < amplitudes_.size(); ++b) amplitudes_[b] *= c + k * act.sign(b);
      return;
    }
    for (std::uint64_t b = 0; b < amplitudes_.size(); ++b) {
      const std::uint64_t b2 = b ^ act.x;
      if (b2 < b) continue;
      const Complex a0 = amplitudes_[b];
      const Complex a1 = amplitudes_[b2];
      amplitudes_[b] = c * a0 + k * act.sign(b2) * a1;
      amplitudes_[b2] = c * a1 + k * act.sign(b) * a0;
    }
  }

  void apply_dense(std::span<const std::size_t> support, const Eigen::MatrixXcd& u) {
    const std::size_t k = support.size();
    std::vector<std::uint64_t> bits(k);
    std::uint64_t support_bits = 0;
    for (std::size_t i = 0; i < k; ++i) {
      bits[i] = 1ULL << (n_ - 1 - support[i]);
      support_bits |= bits[i];
    }
    const std::size_t local_dim = std::size_t{1} << k;
    std::vector<std::uint64_t> offsets(local_dim);
    for (std::size_t l = 0; l < local_dim; ++l) {
      std::uint64_t off = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if ((l >> (k - 1 - i)) & 1ULL) off |= bits[i];
      }
      offsets[l] = off;
    }
    Eigen::VectorXcd local(static_cast<Eigen::Index>(local_dim));
    for (std::uint64_t base = 0; base < amplitudes_.size(); ++base) {
      if (base & support_bits) continue;
      for (std::size_t l = 0; l < local_dim; ++l) local(static_cast<Eigen::Index>(l)) = amplitudes_[base | offsets[l]];
      const Eigen::VectorXcd out = u * local;
      for (std::size_t l = 0; l < local_dim; ++l) amplitudes_[base | offsets[l]] = out(static_cast<Eigen::Index>(l));
    }
  }

  std::size_t n_ = 0;
  std::vector<Complex> amplitudes_;
};

template <class State>
void PulseKernel::apply(State& s, double angle) const {
  if (s.num_qubits() != n_) throw SizeError("pulse generator qubit count does not match the state");
  if (!dense_) {
    s.rotate(single_, scale_ * angle);
    return;
  }
  if (angle == 0.0) return;
  if (support_.empty()) {
    // Pure identity generator: a global phase.
    const Complex ph = std::exp(Complex(0.0, -0.5 * angle * eigenvalues_(0)));
    for (auto& a : s.amplitudes()) a *= ph;
    return;
  }
  s.apply_dense(support_, local_unitary(angle));
}

inline StateVector prepare_basis(std::size_t n, std::string_view bits, std::size_t max_qubits = kDefaultMaxQubits) {
  if (bits.size() != n) throw SizeError("basis string length does not match the qubit count");
  return StateVector::basis(bits, max_qubits);
}

inline StateVector apply_pauli_rotation(StateVector s, const PauliString& p, double angle) {
  s.apply_pauli_rotation(p, angle);
  return s;
}

inline StateVector apply_pulse(StateVector s, const ObservableSum& a, double angle) {
  s.apply_pulse(a, angle);
  return s;
}

inline StateVector apply_controlled_pauli(StateVector s, std::size_t control, const PauliString& p) {
  s.apply_controlled_pauli(control, p);
  return s;
}

inline double expectation(const StateVector& s, const ObservableSum& h) { return s.expectation(h); }

inline double pauli_y_expectation_on_ancilla(const StateVector& s, std::size_t ancilla) {
  return s.ancilla_y_expectation(ancilla);
}

inline double pauli_x_expectation_on_ancilla(const StateVector& s, std::size_t ancilla) {
  return s.ancilla_x_expectation(ancilla);
}

}  // namespace vqo
