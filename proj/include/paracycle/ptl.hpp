#pragma once

// Practical time step limit (PTL) and the cycling controller built on it.
//
// For a first-order update u + dt F the difference between two adjacent
// nodes keeps its sign as long as dt <= -du/dF whenever du*dF < 0. The PTL
// evaluates that bound only around the node with the largest |F|, which is
// where the binding pair was observed to sit; `check_all_points` scans the
// whole grid instead.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paracycle/operators.hpp"
#include "paracycle/schemes.hpp"

namespace paracycle {

enum class DtFloorMode {
  clamp_to_euler,    ///< cycle dt >= dt_euler
  clamp_to_fraction  ///< cycle dt >= fraction * dt_euler
};

enum class PtlMode {
  off,           ///< one step over the whole outer interval
  static_first,  ///< PTL from the first cycle reused for every cycle
  dynamic        ///< PTL re-evaluated before every cycle
};

struct PtlConfig {
  double eps_rel = 1e-12;
  DtFloorMode floor_mode = DtFloorMode::clamp_to_euler;
  double floor_fraction = 1.0;
  long max_cycles = 1000000;
  bool check_all_points = false;
  PtlMode mode = PtlMode::dynamic;
  /// Refreeze the lagged state (and the Euler limit) before every cycle
  /// instead of once per cycle_operator call.
  bool refresh_lag_each_cycle = false;

  void validate() const;
};

std::string to_string(PtlMode mode);
PtlMode parse_ptl_mode(const std::string& name);

/// Empty when no adjacent pair restricts the step. Neighbours wrap across
/// periodic faces of `bc`.
std::optional<double> compute_ptl(const Field& u, const Field& F, const BoundaryCondition& bc,
                                  const PtlConfig& cfg);
std::optional<double> compute_ptl(const Field& u, const Field& F, const PtlConfig& cfg);

/// Lowest linear index (over points, then components) attaining max |F|.
Index argmax_abs(const Field& F);

struct CycleRecord {
  int outer_step = 0;
  long cycle = 0;
  double dt = 0.0;
  std::optional<double> ptl_raw;
  bool limited = false;  ///< dt came from the PTL or its floor, not the remaining time
  int iters = 0;         ///< STS stages, PCG iterations, or 1 for Euler
};

struct CycleReport {
  std::vector<CycleRecord> cycles;

  long n_cycles() const { return static_cast<long>(cycles.size()); }
  double total_dt() const;
  long total_iters() const;
  void append(const CycleReport& other);

  /// `outer_step,cycle,dt,ptl_raw,limited,iters`; unlimited PTL prints as inf.
  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
};

/// The cycle cap was reached before the outer interval was covered.
class CycleCapExceeded : public Error {
 public:
  CycleCapExceeded(CycleReport partial, const std::string& what)
      : Error(what), partial_(std::move(partial)) {}
  const CycleReport& partial_report() const { return partial_; }

 private:
  CycleReport partial_;
};

struct CycleResult {
  Field u;
  CycleReport report;
};

/// Subdivides outer_dt into scheme steps of at most the (floored) PTL. An
/// unfrozen aligned operator is frozen on `u` first. Explicit Euler steps are
/// additionally capped at the Euler limit.
CycleResult cycle_operator(const DiffusionOperator& op, const SchemeConfig& scheme, const Field& u,
                           double outer_dt, const PtlConfig& cfg, int outer_step = 0);

struct SplitOperator {
  std::string name;
  std::string field;  ///< key in the state map this operator acts on
  DiffusionOperator op;
  SchemeConfig scheme;
  PtlConfig ptl;
};

using State = std::map<std::string, Field>;

struct SplitResult {
  State state;
  std::vector<CycleReport> reports;  ///< one per operator, in list order
};

/// First-order sequential splitting: each operator is cycled over the full
/// outer_dt on the output of its predecessor. Aligned operators have their
/// lagged state refreshed from their field once, before their cycling.
SplitResult split_advance(const std::vector<SplitOperator>& ops, State state, double outer_dt,
                          int outer_step = 0);

}  // namespace paracycle
