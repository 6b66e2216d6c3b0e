#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qlab/model.hpp"
#include "qlab/rng.hpp"

namespace qlab::qsim {

// Named contiguous qubit registers. Basis-state indices are register-major
// in declaration order with the most-significant bit first, i.e. the first
// register occupies the top bits of the index and within a register the
// first qubit is the register's most-significant bit. Width-0 registers
// are legal (a one-point domain needs no address qubits).
class RegisterLayout {
 public:
  struct Register {
    std::string name;
    int width = 0;
  };

  explicit RegisterLayout(std::vector<Register> regs);

  int total_qubits() const { return total_; }
  int width(const std::string& name) const;
  int offset(const std::string& name) const;  // index of the register's MSB qubit
  bool has(const std::string& name) const;
  // Global qubit indices of the register, MSB first.
  std::vector<int> qubits(const std::string& name) const;

  // Basis-index field access for the register's bit block.
  std::uint64_t field(std::uint64_t basis, const std::string& name) const;
  std::uint64_t with_field(std::uint64_t basis, const std::string& name,
                           std::uint64_t value) const;

  // Layout for plain labeled examples: registers x, y.
  static RegisterLayout example(int n, int k);
  // Layout for the label-translation circuit:
  // x, y (1 qubit), notY (1 qubit), f0, f1, fy (ceil(log2 k) each).
  static RegisterLayout reduction(int n, int k);

 private:
  std::vector<Register> regs_;
  int total_ = 0;
};

int ceil_log2(int n);

// Dense statevector over total_qubits() qubits; length 2^Q, norm 1 within
// 1e-10 wherever an operation requires a normalized state.
struct StateVector {
  std::vector<std::complex<double>> amps;

  explicit StateVector(int num_qubits);
  int num_qubits() const { return num_qubits_; }
  double norm() const;

 private:
  int num_qubits_ = 0;
};

// Total function {0,1}^in_bits -> {0,1}^out_bits, tabulated.
struct TruthTable {
  int in_bits = 0;
  int out_bits = 0;
  std::vector<std::uint32_t> table;  // size 2^in_bits, entries < 2^out_bits

  void validate() const;
  std::uint32_t operator()(std::uint64_t input) const {
    return table[static_cast<std::size_t>(input)];
  }
};

// --- State preparation ---------------------------------------------------

// sum_x sqrt(D(x)) |x, target(x)> with every other register at |0>.
// The layout must contain x and y registers wide enough for n and the
// target's labels.
StateVector prepare_realizable_example(const model::Distribution& d,
                                       const model::Hypothesis& target,
                                       const RegisterLayout& layout);

// sum_{x,y} sqrt(joint(x*k + y)) |x, y>.
StateVector prepare_agnostic_example(const model::Distribution& joint, int n, int k,
                                     const RegisterLayout& layout);

// --- Measurement and gates ------------------------------------------------

struct MeasureResult {
  std::uint64_t outcome = 0;  // basis index
  StateVector collapsed;      // the basis state |outcome>
};

// Born-rule computational-basis measurement.
MeasureResult measure_computational(const StateVector& state, Rng& rng);

void apply_x(StateVector& state, int qubit);
void apply_cnot(StateVector& state, int control, int target);
void apply_toffoli(StateVector& state, int control1, int control2, int target);

// |a, b> -> |a, b xor f(a)> on explicit qubit lists (MSB first). The input
// and output lists must be disjoint.
void apply_xor_oracle(StateVector& state, const TruthTable& f,
                      const std::vector<int>& in_qubits,
                      const std::vector<int>& out_qubits);

// Convenience: register-named oracle application.
void apply_xor_oracle(StateVector& state, const TruthTable& f,
                      const RegisterLayout& layout,
                      const std::vector<std::string>& in_registers,
                      const std::string& out_register);

// Tabulates x -> f(x) over the full 2^in_bits input range; domain points
// beyond n map to 0 (they never carry amplitude).
TruthTable label_oracle_table(const std::vector<model::Label>& f, int in_bits, int out_bits);

// The label-recovery predicate used by the translation circuit: on input
// (a, b, c) returns 1 when c = b and 0 when c = a, with unrealized
// triples mapped to 0. Requires f0(x) != f1(x) for every x, which makes
// every realized triple unambiguous.
TruthTable recovery_predicate_table(const std::vector<model::Label>& f0,
                                    const std::vector<model::Label>& f1, int k);

// --- Binary-to-multiclass example translation -----------------------------

// Rewrites a realizable binary example state
//   sum_x sqrt(D(x)) |x, c(x)>  (tensored with |0> work registers)
// into sum_x sqrt(D(x)) |x, f_{c(x)}(x)> on the fy register, restoring
// y, notY, f0 and f1 to exactly |0>. The gate schedule:
//   1. X on notY, then CNOT y -> notY            (notY = 1 - y)
//   2. XOR oracle for f0 into the f0 register
//   3. XOR oracle for f1 into the f1 register
//   4. per-bit Toffoli (y, f1 bit) -> fy bit
//   5. per-bit Toffoli (notY, f0 bit) -> fy bit  (fy = f_y(x))
//   6. CNOT y -> notY, then X on notY            (uncompute notY)
//   7. XOR oracle of the recovery predicate (f0, f1, fy) into y
//   8. XOR oracles for f0 and f1 again           (clear work registers)
// Preconditions: layout is RegisterLayout::reduction(n, k); the input
// state's support lies in x < n with all work registers at |0>.
// Postcondition is checked; residual amplitude on a non-cleared register
// raises CircuitFaultError.
StateVector binary_to_multiclass_transform(const StateVector& state,
                                           const std::vector<model::Label>& f0,
                                           const std::vector<model::Label>& f1,
                                           const RegisterLayout& layout);

// Drops the cleared registers of a transformed state, re-indexing it onto
// RegisterLayout::example(n, k) over (x, fy).
StateVector extract_example_state(const StateVector& state, const RegisterLayout& layout,
                                  int n, int k);

// --- Learner wrapping ------------------------------------------------------

// A quantum batch learner: consumes example states over the given layout
// and returns a hypothesis on the layout's domain.
using QuantumLearner = std::function<model::Hypothesis(
    const std::vector<StateVector>&, const RegisterLayout&, Rng&)>;

// Wraps a k-label learner into a binary learner for classes witnessed by
// the pointwise-disagreeing label maps f0/f1 on the points s_index:
// each binary example state is translated, the inner learner runs on the
// translated states, and the returned g is read back through
// f(i) = 1 iff g(s_index[i]) = f1[i].
QuantumLearner reduction_wrap_learner(QuantumLearner inner,
                                      std::vector<model::Label> f0,
                                      std::vector<model::Label> f1, int k,
                                      std::vector<int> s_index);

}  // namespace qlab::qsim
