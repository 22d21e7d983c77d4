#pragma once

// Finite-trace temporal specifications over polytope atoms.
//
// Trajectories are (x_0, ..., x_N) and every horizon refers to absolute time
// offsets from the step where the operator is evaluated:
//   X[k] p   holds at i if p holds at i + k
//   F[k] p   holds at i if p holds at some m with i <= m <= i + k
//   G[k] p   holds at i if p holds for every m with i <= m <= i + k
//   U[k](p, q) holds at i if q holds at some m in [i, i + k] and p holds on
//            [i, m)
// With `strict_eventually`, F and U witnesses start at i + 1 instead.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "resilience/polytope.h"

namespace resilience {

enum class SpecKind {
  kTrue,
  kFalse,
  kAtom,
  kNot,
  kAnd,
  kOr,
  kNext,
  kEventually,
  kAlways,
  kUntil,
};

struct SourcePos {
  int line = 1;
  int column = 1;
};

struct SpecNode;
using SpecPtr = std::shared_ptr<const SpecNode>;

struct SpecNode {
  SpecKind kind = SpecKind::kTrue;
  int horizon = 0;       // X, F, G, U only
  std::string atom;      // kAtom only
  std::vector<SpecPtr> children;
  SourcePos pos;

  static SpecPtr True(SourcePos pos = {});
  static SpecPtr False(SourcePos pos = {});
  static SpecPtr Atom(std::string name, SourcePos pos = {});
  static SpecPtr Not(SpecPtr child, SourcePos pos = {});
  static SpecPtr And(std::vector<SpecPtr> children, SourcePos pos = {});
  static SpecPtr Or(std::vector<SpecPtr> children, SourcePos pos = {});
  static SpecPtr Next(int k, SpecPtr child, SourcePos pos = {});
  static SpecPtr Eventually(int k, SpecPtr child, SourcePos pos = {});
  static SpecPtr Always(int k, SpecPtr child, SourcePos pos = {});
  static SpecPtr Until(int k, SpecPtr left, SpecPtr right, SourcePos pos = {});
};

/// Structural equality; source positions are ignored.
bool SpecEqual(const SpecNode& a, const SpecNode& b);

/// Malformed text, unbound atom or negative horizon.
class SpecSyntaxError : public std::runtime_error {
 public:
  SpecSyntaxError(const std::string& message, SourcePos pos);
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

/// Construct outside the convex synthesis fragment.
class UnsupportedSpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plan enumeration would exceed the configured cap.
class PlanCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `text`; every identifier must be a key of `bindings`.
SpecPtr ParseSpec(std::string_view text, const SetTable& bindings);

/// Parses without checking atom bindings.
SpecPtr ParseSpecUnbound(std::string_view text);

/// Canonical text; ParseSpec(PrintSpec(s)) is structurally equal to s.
std::string PrintSpec(const SpecNode& spec);

/// Largest absolute time index the spec can reference from step 0.
int RequiredHorizon(const SpecNode& spec);

/// Names of all atoms, sorted and unique.
std::vector<std::string> AtomNames(const SpecNode& spec);

/// 64-bit FNV-1a hash of the canonical text, as 16 hex digits.
std::string SpecHash(const SpecNode& spec);

struct SemanticsOptions {
  bool strict_eventually = false;
};

/// Satisfaction at step 0. `trajectory` holds x_0..x_T as columns and must
/// cover RequiredHorizon(spec); throws std::out_of_range otherwise.
bool Evaluate(const SpecNode& spec, const Eigen::MatrixXd& trajectory,
              const SetTable& bindings, const SemanticsOptions& options = {});

/// x_t must lie in the named set.
struct ReachRow {
  int time = 0;
  std::string set;
  auto operator<=>(const ReachRow&) const = default;
};

/// x_k must lie in the named set for every k in [first, last].
struct SafetyWindow {
  int first = 0;
  int last = 0;
  std::string set;
  auto operator<=>(const SafetyWindow&) const = default;
};

/// One conjunctive disjunct of an expanded specification.
struct ConstraintPlan {
  std::vector<ReachRow> reach_rows;
  std::vector<SafetyWindow> safety_rows;

  /// Maximum time index referenced (0 for the empty plan).
  int horizon() const;

  /// Every (time, set) membership the plan requires, sorted and unique.
  std::vector<ReachRow> Requirements() const;

  /// Reach times in the order the rows were produced.
  std::vector<int> ReachTimes() const;

  /// Short human-readable form, e.g. "T1@2 T2@5 S@[0,13]".
  std::string Describe() const;

  /// True iff x_t is in the set for every requirement (tolerance applied).
  bool SatisfiedBy(const Eigen::MatrixXd& trajectory,
                   const SetTable& bindings) const;
};

struct PlanOptions {
  bool strict_eventually = false;
  std::size_t plan_cap = 100000;
};

/// Expands `spec` into conjunctive plans whose disjunction is equivalent to
/// the spec on trajectories (x_0, ..., x_N). Throws std::invalid_argument when
/// RequiredHorizon(spec) exceeds N. Duplicates (same requirement set) keep their first
/// occurrence; the order is deterministic and nested eventualities are listed
/// in lexicographic order of their reach times.
std::vector<ConstraintPlan> EnumeratePlans(const SpecNode& spec, int horizon,
                                           const PlanOptions& options = {});

}  // namespace resilience
