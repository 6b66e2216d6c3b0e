#include "qlab/qsim.hpp"

#include <algorithm>
#include <cmath>

namespace qlab::qsim {

namespace {

constexpr int kMaxQubits = 22;
constexpr double kNormTolerance = 1e-10;
constexpr double kResidualTolerance = 1e-12;

std::uint64_t qubit_mask(int total, int qubit) {
  return 1ULL << (total - 1 - qubit);
}

void check_qubit(int total, int qubit, const char* op) {
  if (qubit < 0 || qubit >= total) {
    throw ArgumentError(std::string(op) + ": qubit index out of range");
  }
}

}  // namespace

int ceil_log2(int n) {
  if (n < 1) throw ArgumentError("ceil_log2: argument must be >= 1");
  int bits = 0;
  while ((1 << bits) < n) ++bits;
  return bits;
}

RegisterLayout::RegisterLayout(std::vector<Register> regs) : regs_(std::move(regs)) {
  for (const Register& r : regs_) {
    if (r.width < 0) throw ArgumentError("layout: negative register width");
    if (r.name.empty()) throw ArgumentError("layout: unnamed register");
    total_ += r.width;
  }
  for (std::size_t i = 0; i < regs_.size(); ++i) {
    for (std::size_t j = i + 1; j < regs_.size(); ++j) {
      if (regs_[i].name == regs_[j].name) throw ArgumentError("layout: duplicate register");
    }
  }
  if (total_ > kMaxQubits) throw SizeLimitError("layout: more than 22 qubits");
}

int RegisterLayout::width(const std::string& name) const {
  for (const Register& r : regs_) {
    if (r.name == name) return r.width;
  }
  throw ArgumentError("layout: no register named " + name);
}

int RegisterLayout::offset(const std::string& name) const {
  int off = 0;
  for (const Register& r : regs_) {
    if (r.name == name) return off;
    off += r.width;
  }
  throw ArgumentError("layout: no register named " + name);
}

bool RegisterLayout::has(const std::string& name) const {
  for (const Register& r : regs_) {
    if (r.name == name) return true;
  }
  return false;
}

std::vector<int> RegisterLayout::qubits(const std::string& name) const {
  const int off = offset(name);
  const int w = width(name);
  std::vector<int> out(static_cast<std::size_t>(w));
  for (int i = 0; i < w; ++i) out[static_cast<std::size_t>(i)] = off + i;
  return out;
}

std::uint64_t RegisterLayout::field(std::uint64_t basis, const std::string& name) const {
  const int w = width(name);
  if (w == 0) return 0;
  const int shift = total_ - offset(name) - w;
  return (basis >> shift) & ((1ULL << w) - 1);
}

std::uint64_t RegisterLayout::with_field(std::uint64_t basis, const std::string& name,
                                         std::uint64_t value) const {
  const int w = width(name);
  if (value >= (1ULL << w)) throw ArgumentError("layout: field value too wide for " + name);
  if (w == 0) return basis;
  const int shift = total_ - offset(name) - w;
  const std::uint64_t mask = ((1ULL << w) - 1) << shift;
  return (basis & ~mask) | (value << shift);
}

RegisterLayout RegisterLayout::example(int n, int k) {
  if (n < 1) throw ArgumentError("layout: n must be >= 1");
  if (k < 2) throw ArgumentError("layout: k must be >= 2");
  return RegisterLayout({{"x", ceil_log2(n)}, {"y", ceil_log2(k)}});
}

RegisterLayout RegisterLayout::reduction(int n, int k) {
  if (n < 1) throw ArgumentError("layout: n must be >= 1");
  if (k < 2) throw ArgumentError("layout: k must be >= 2");
  const int bits = ceil_log2(k);
  return RegisterLayout({{"x", ceil_log2(n)},
                         {"y", 1},
                         {"notY", 1},
                         {"f0", bits},
                         {"f1", bits},
                         {"fy", bits}});
}

StateVector::StateVector(int num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits < 0) throw ArgumentError("state: negative qubit count");
  if (num_qubits > kMaxQubits) throw SizeLimitError("state: more than 22 qubits");
  amps.assign(1ULL << num_qubits, {0.0, 0.0});
}

double StateVector::norm() const {
  double s = 0.0;
  for (const std::complex<double>& a : amps) s += std::norm(a);
  return std::sqrt(s);
}

void TruthTable::validate() const {
  if (in_bits < 0 || in_bits > 22 || out_bits < 1 || out_bits > 22) {
    throw ArgumentError("truth table: bad bit widths");
  }
  if (table.size() != (1ULL << in_bits)) {
    throw ArgumentError("truth table: size != 2^in_bits");
  }
  for (std::uint32_t v : table) {
    if (v >= (1ULL << out_bits)) throw ArgumentError("truth table: entry too wide");
  }
}

StateVector prepare_realizable_example(const model::Distribution& d,
                                       const model::Hypothesis& target,
                                       const RegisterLayout& layout) {
  d.validate();
  const int n = d.support_size();
  if (target.domain_size() != n) {
    throw ArgumentError("prepare_realizable_example: target length != support");
  }
  if (!layout.has("x") || !layout.has("y")) {
    throw ArgumentError("prepare_realizable_example: layout lacks x/y registers");
  }
  if (n > 1 && ceil_log2(n) > layout.width("x")) {
    throw ArgumentError("prepare_realizable_example: x register too small");
  }
  StateVector state(layout.total_qubits());
  for (int x = 0; x < n; ++x) {
    const model::Label y = target(x);
    if (y < 0) throw ArgumentError("prepare_realizable_example: negative label");
    std::uint64_t basis = layout.with_field(0, "x", static_cast<std::uint64_t>(x));
    basis = layout.with_field(basis, "y", static_cast<std::uint64_t>(y));
    state.amps[basis] = std::sqrt(d(x));
  }
  return state;
}

StateVector prepare_agnostic_example(const model::Distribution& joint, int n, int k,
                                     const RegisterLayout& layout) {
  joint.validate();
  if (n < 1 || k < 2) throw ArgumentError("prepare_agnostic_example: bad n/k");
  if (joint.support_size() != n * k) {
    throw ArgumentError("prepare_agnostic_example: joint support != n*k");
  }
  if (!layout.has("x") || !layout.has("y")) {
    throw ArgumentError("prepare_agnostic_example: layout lacks x/y registers");
  }
  if (n > 1 && ceil_log2(n) > layout.width("x")) {
    throw ArgumentError("prepare_agnostic_example: x register too small");
  }
  if (ceil_log2(k) > layout.width("y")) {
    throw ArgumentError("prepare_agnostic_example: y register too small");
  }
  StateVector state(layout.total_qubits());
  for (int x = 0; x < n; ++x) {
    for (model::Label y = 0; y < k; ++y) {
      std::uint64_t basis = layout.with_field(0, "x", static_cast<std::uint64_t>(x));
      basis = layout.with_field(basis, "y", static_cast<std::uint64_t>(y));
      state.amps[basis] = std::sqrt(joint(x * k + y));
    }
  }
  return state;
}

MeasureResult measure_computational(const StateVector& state, Rng& rng) {
  double total = 0.0;
  for (const std::complex<double>& a : state.amps) total += std::norm(a);
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw PreconditionError("measure: state is not normalized");
  }
  const double r = rng.next_double() * total;
  double acc = 0.0;
  std::uint64_t outcome = state.amps.size() - 1;
  for (std::size_t i = 0; i < state.amps.size(); ++i) {
    acc += std::norm(state.amps[i]);
    if (r < acc) {
      outcome = i;
      break;
    }
  }
  MeasureResult result{outcome, StateVector(state.num_qubits())};
  result.collapsed.amps[outcome] = 1.0;
  return result;
}

void apply_x(StateVector& state, int qubit) {
  const int total = state.num_qubits();
  check_qubit(total, qubit, "apply_x");
  const std::uint64_t mask = qubit_mask(total, qubit);
  for (std::uint64_t i = 0; i < state.amps.size(); ++i) {
    if (!(i & mask)) std::swap(state.amps[i], state.amps[i | mask]);
  }
}

void apply_cnot(StateVector& state, int control, int target) {
  const int total = state.num_qubits();
  check_qubit(total, control, "apply_cnot");
  check_qubit(total, target, "apply_cnot");
  if (control == target) throw ArgumentError("apply_cnot: control equals target");
  const std::uint64_t cm = qubit_mask(total, control);
  const std::uint64_t tm = qubit_mask(total, target);
  for (std::uint64_t i = 0; i < state.amps.size(); ++i) {
    if ((i & cm) && !(i & tm)) std::swap(state.amps[i], state.amps[i | tm]);
  }
}

void apply_toffoli(StateVector& state, int control1, int control2, int target) {
  const int total = state.num_qubits();
  check_qubit(total, control1, "apply_toffoli");
  check_qubit(total, control2, "apply_toffoli");
  check_qubit(total, target, "apply_toffoli");
  if (control1 == control2 || control1 == target || control2 == target) {
    throw ArgumentError("apply_toffoli: qubit collision");
  }
  const std::uint64_t c1 = qubit_mask(total, control1);
  const std::uint64_t c2 = qubit_mask(total, control2);
  const std::uint64_t tm = qubit_mask(total, target);
  for (std::uint64_t i = 0; i < state.amps.size(); ++i) {
    if ((i & c1) && (i & c2) && !(i & tm)) std::swap(state.amps[i], state.amps[i | tm]);
  }
}

void apply_xor_oracle(StateVector& state, const TruthTable& f,
                      const std::vector<int>& in_qubits,
                      const std::vector<int>& out_qubits) {
  f.validate();
  const int total = state.num_qubits();
  if (static_cast<int>(in_qubits.size()) != f.in_bits ||
      static_cast<int>(out_qubits.size()) != f.out_bits) {
    throw ArgumentError("apply_xor_oracle: qubit list width mismatch");
  }
  for (int q : in_qubits) check_qubit(total, q, "apply_xor_oracle");
  for (int q : out_qubits) {
    check_qubit(total, q, "apply_xor_oracle");
    if (std::find(in_qubits.begin(), in_qubits.end(), q) != in_qubits.end()) {
      throw ArgumentError("apply_xor_oracle: input and output qubits overlap");
    }
  }

  std::vector<std::complex<double>> next(state.amps.size(), {0.0, 0.0});
  for (std::uint64_t i = 0; i < state.amps.size(); ++i) {
    std::uint64_t a = 0;
    for (int q : in_qubits) a = (a << 1) | ((i & qubit_mask(total, q)) ? 1 : 0);
    const std::uint32_t v = f(a);
    std::uint64_t j = i;
    for (int b = 0; b < f.out_bits; ++b) {
      if ((v >> (f.out_bits - 1 - b)) & 1) {
        j ^= qubit_mask(total, out_qubits[static_cast<std::size_t>(b)]);
      }
    }
    next[j] = state.amps[i];
  }
  state.amps.swap(next);
}

void apply_xor_oracle(StateVector& state, const TruthTable& f,
                      const RegisterLayout& layout,
                      const std::vector<std::string>& in_registers,
                      const std::string& out_register) {
  std::vector<int> in_qubits;
  for (const std::string& name : in_registers) {
    for (int q : layout.qubits(name)) in_qubits.push_back(q);
  }
  apply_xor_oracle(state, f, in_qubits, layout.qubits(out_register));
}

TruthTable label_oracle_table(const std::vector<model::Label>& f, int in_bits, int out_bits) {
  TruthTable t;
  t.in_bits = in_bits;
  t.out_bits = out_bits;
  t.table.assign(1ULL << in_bits, 0);
  if (f.size() > t.table.size()) {
    throw ArgumentError("label_oracle_table: domain larger than input range");
  }
  for (std::size_t x = 0; x < f.size(); ++x) {
    if (f[x] < 0 || static_cast<std::uint64_t>(f[x]) >= (1ULL << out_bits)) {
      throw ArgumentError("label_oracle_table: label too wide");
    }
    t.table[x] = static_cast<std::uint32_t>(f[x]);
  }
  t.validate();
  return t;
}

TruthTable recovery_predicate_table(const std::vector<model::Label>& f0,
                                    const std::vector<model::Label>& f1, int k) {
  if (k < 2) throw ArgumentError("recovery_predicate_table: k must be >= 2");
  if (f0.size() != f1.size() || f0.empty()) {
    throw ArgumentError("recovery_predicate_table: witness size mismatch");
  }
  const int bits = ceil_log2(k);
  TruthTable t;
  t.in_bits = 3 * bits;
  t.out_bits = 1;
  t.table.assign(1ULL << t.in_bits, 0);
  std::vector<bool> assigned(t.table.size(), false);
  for (std::size_t x = 0; x < f0.size(); ++x) {
    const model::Label a = f0[x];
    const model::Label b = f1[x];
    if (a < 0 || a >= k || b < 0 || b >= k) {
      throw ArgumentError("recovery_predicate_table: label out of range");
    }
    if (a == b) {
      throw ArgumentError("recovery_predicate_table: witnesses must disagree pointwise");
    }
    for (int y = 0; y < 2; ++y) {
      const model::Label c = y ? b : a;
      const std::uint64_t input =
          (static_cast<std::uint64_t>(a) << (2 * bits)) |
          (static_cast<std::uint64_t>(b) << bits) | static_cast<std::uint64_t>(c);
      if (assigned[input] && t.table[input] != static_cast<std::uint32_t>(y)) {
        // c = b and c = a cannot both hold when a != b, so realized
        // triples are never ambiguous.
        throw InternalInvariantError("recovery_predicate_table: ambiguous triple");
      }
      assigned[input] = true;
      t.table[input] = static_cast<std::uint32_t>(y);
    }
  }
  t.validate();
  return t;
}

StateVector binary_to_multiclass_transform(const StateVector& state,
                                           const std::vector<model::Label>& f0,
                                           const std::vector<model::Label>& f1,
                                           const RegisterLayout& layout) {
  const int n = static_cast<int>(f0.size());
  if (n < 1 || f1.size() != f0.size()) {
    throw ArgumentError("transform: witness size mismatch");
  }
  for (const char* name : {"x", "y", "notY", "f0", "f1", "fy"}) {
    if (!layout.has(name)) throw ArgumentError("transform: layout lacks register " + std::string(name));
  }
  if (layout.width("y") != 1 || layout.width("notY") != 1) {
    throw ArgumentError("transform: y/notY must be single qubits");
  }
  const int bits = layout.width("f0");
  if (layout.width("f1") != bits || layout.width("fy") != bits || bits < 1) {
    throw ArgumentError("transform: f0/f1/fy widths must match");
  }
  if (state.num_qubits() != layout.total_qubits()) {
    throw ArgumentError("transform: state size does not match layout");
  }
  if (ceil_log2(n) != layout.width("x")) {
    throw ArgumentError("transform: witness size does not match the x register");
  }
  for (int x = 0; x < n; ++x) {
    if (f0[static_cast<std::size_t>(x)] == f1[static_cast<std::size_t>(x)]) {
      throw ArgumentError("transform: witnesses must disagree pointwise");
    }
  }

  for (std::uint64_t i = 0; i < state.amps.size(); ++i) {
    if (state.amps[i] == std::complex<double>{0.0, 0.0}) continue;
    if (layout.field(i, "x") >= static_cast<std::uint64_t>(n) ||
        layout.field(i, "notY") != 0 || layout.field(i, "f0") != 0 ||
        layout.field(i, "f1") != 0 || layout.field(i, "fy") != 0) {
      throw PreconditionError("transform: input support outside example form");
    }
  }

  StateVector out = state;
  const int y_q = layout.qubits("y")[0];
  const int notY_q = layout.qubits("notY")[0];
  const std::vector<int> f0_q = layout.qubits("f0");
  const std::vector<int> f1_q = layout.qubits("f1");
  const std::vector<int> fy_q = layout.qubits("fy");
  const TruthTable f0_table = label_oracle_table(f0, layout.width("x"), bits);
  const TruthTable f1_table = label_oracle_table(f1, layout.width("x"), bits);
  const TruthTable h_table = recovery_predicate_table(f0, f1, 1 << bits);

  // 1. notY = 1 - y.
  apply_x(out, notY_q);
  apply_cnot(out, y_q, notY_q);
  // 2-3. Load both candidate labels.
  apply_xor_oracle(out, f0_table, layout, {"x"}, "f0");
  apply_xor_oracle(out, f1_table, layout, {"x"}, "f1");
  // 4-5. fy = y*f1(x) xor (1-y)*f0(x) = f_y(x), bit by bit.
  for (int b = 0; b < bits; ++b) {
    apply_toffoli(out, y_q, f1_q[static_cast<std::size_t>(b)], fy_q[static_cast<std::size_t>(b)]);
  }
  for (int b = 0; b < bits; ++b) {
    apply_toffoli(out, notY_q, f0_q[static_cast<std::size_t>(b)], fy_q[static_cast<std::size_t>(b)]);
  }
  // 6. Uncompute notY.
  apply_cnot(out, y_q, notY_q);
  apply_x(out, notY_q);
  // 7. Recover y from (f0, f1, fy) and clear it.
  apply_xor_oracle(out, h_table, layout, {"f0", "f1", "fy"}, "y");
  // 8. XOR oracles are involutions; reapplying clears f0 and f1.
  apply_xor_oracle(out, f0_table, layout, {"x"}, "f0");
  apply_xor_oracle(out, f1_table, layout, {"x"}, "f1");

  for (std::uint64_t i = 0; i < out.amps.size(); ++i) {
    if (std::abs(out.amps[i]) <= kResidualTolerance) continue;
    if (layout.field(i, "y") != 0 || layout.field(i, "notY") != 0 ||
        layout.field(i, "f0") != 0 || layout.field(i, "f1") != 0) {
      throw CircuitFaultError("transform: work register not restored to |0>");
    }
  }
  return out;
}

StateVector extract_example_state(const StateVector& state, const RegisterLayout& layout,
                                  int n, int k) {
  const RegisterLayout ex = RegisterLayout::example(n, k);
  StateVector out(ex.total_qubits());
  for (std::uint64_t i = 0; i < state.amps.size(); ++i) {
    if (state.amps[i] == std::complex<double>{0.0, 0.0}) continue;
    if (layout.field(i, "y") != 0 || layout.field(i, "notY") != 0 ||
        layout.field(i, "f0") != 0 || layout.field(i, "f1") != 0) {
      throw CircuitFaultError("extract: work register carries amplitude");
    }
    const std::uint64_t x = layout.field(i, "x");
    const std::uint64_t fy = layout.field(i, "fy");
    if (x >= static_cast<std::uint64_t>(n) || fy >= static_cast<std::uint64_t>(k)) {
      throw CircuitFaultError("extract: outcome outside (n, k) range");
    }
    std::uint64_t basis = ex.with_field(0, "x", x);
    basis = ex.with_field(basis, "y", fy);
    out.amps[basis] = state.amps[i];
  }
  return out;
}

QuantumLearner reduction_wrap_learner(QuantumLearner inner, std::vector<model::Label> f0,
                                      std::vector<model::Label> f1, int k,
                                      std::vector<int> s_index) {
  const int d = static_cast<int>(f0.size());
  if (d < 1 || f1.size() != f0.size() || s_index.size() != f0.size()) {
    throw ArgumentError("reduction_wrap_learner: witness/index size mismatch");
  }
  if (k < 2) throw ArgumentError("reduction_wrap_learner: k must be >= 2");
  for (int i = 0; i < d; ++i) {
    const model::Label a = f0[static_cast<std::size_t>(i)];
    const model::Label b = f1[static_cast<std::size_t>(i)];
    if (a < 0 || a >= k || b < 0 || b >= k) {
      throw ArgumentError("reduction_wrap_learner: label out of range");
    }
    if (a == b) throw ArgumentError("reduction_wrap_learner: witnesses must disagree");
  }

  return [inner = std::move(inner), f0 = std::move(f0), f1 = std::move(f1), k,
          s_index = std::move(s_index), d](const std::vector<StateVector>& states,
                                           const RegisterLayout& layout, Rng& rng) {
    const RegisterLayout red = RegisterLayout::reduction(d, k);
    const RegisterLayout ex = RegisterLayout::example(d, k);
    std::vector<StateVector> translated;
    translated.reserve(states.size());
    for (const StateVector& s : states) {
      if (s.num_qubits() != layout.total_qubits()) {
        throw ArgumentError("reduction_wrap_learner: state does not match layout");
      }
      StateVector embedded(red.total_qubits());
      for (std::uint64_t i = 0; i < s.amps.size(); ++i) {
        if (s.amps[i] == std::complex<double>{0.0, 0.0}) continue;
        const std::uint64_t x = layout.field(i, "x");
        const std::uint64_t y = layout.field(i, "y");
        if (y > 1) throw ArgumentError("reduction_wrap_learner: non-binary example label");
        std::uint64_t basis = red.with_field(0, "x", x);
        basis = red.with_field(basis, "y", y);
        embedded.amps[basis] = s.amps[i];
      }
      const StateVector transformed = binary_to_multiclass_transform(embedded, f0, f1, red);
      translated.push_back(extract_example_state(transformed, red, d, k));
    }
    const model::Hypothesis g = inner(translated, ex, rng);
    model::Hypothesis f;
    f.labels.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const int s = s_index[static_cast<std::size_t>(i)];
      if (s < 0 || s >= g.domain_size()) {
        throw ArgumentError("reduction_wrap_learner: s_index outside learner domain");
      }
      f.labels[static_cast<std::size_t>(i)] =
          g(s) == f1[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    return f;
  };
}

}  // namespace qlab::qsim
