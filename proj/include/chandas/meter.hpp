#pragma once

// Meters as per-position weight constraints, precompiled prefix filters over
// weight strings, and verse classification.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chandas/prosody.hpp"

namespace chandas {

enum class PositionConstraint : std::uint8_t { Any, MustLaghu, MustGuru };

char to_char(PositionConstraint c);
bool admits(PositionConstraint c, Weight w);

struct MeterSpec {
  std::string name;
  std::size_t pada_count = 0;
  std::size_t pada_len = 0;
  std::vector<PositionConstraint> constraints;

  std::size_t total() const { return pada_count * pada_len; }
  std::string constraint_string() const;

  // Raises Error(InvalidArgument) when the shape is inconsistent.
  void validate() const;

  friend bool operator==(const MeterSpec&, const MeterSpec&) = default;
};

MeterSpec anustubh();

// Declarative meter file: `key = value` lines for name, pada_count, pada_len
// and constraints (a string over {., l, g}); '#' starts a comment.
MeterSpec parse_meter_spec(std::string_view text);
MeterSpec load_meter_spec(const std::filesystem::path& path);
std::string format_meter_spec(const MeterSpec& spec);

// Resolves a builtin name, a file path, or `<name>.meter` inside any directory
// listed in CHANDAS_METER_PATH (colon separated).
MeterSpec resolve_meter(std::string_view name_or_path);

// An anchored pattern over {l, g} built from '.', 'l', 'g' atoms with optional
// `{n}` repetition, e.g. "^.{4}lgg.$". Matching is exact-length.
class WeightPattern {
 public:
  static WeightPattern compile(std::string_view pattern);

  const std::string& source() const { return source_; }
  std::size_t length() const { return atoms_.size(); }

  bool matches(std::span<const Weight> weights) const;

 private:
  std::string source_;
  std::vector<PositionConstraint> atoms_;
};

class FilterSet {
 public:
  explicit FilterSet(MeterSpec spec);

  const MeterSpec& spec() const { return spec_; }
  std::size_t max_length() const { return filters_.size(); }

  // Filter accepting weight strings of exactly `length` syllables (1-based).
  const WeightPattern& filter(std::size_t length) const { return filters_.at(length - 1); }

 private:
  MeterSpec spec_;
  std::vector<WeightPattern> filters_;
};

// Renders the anchored prefix pattern for the first `length` positions, with
// each pada contributing its own run-length encoded segment.
std::string prefix_pattern(const MeterSpec& spec, std::size_t length);

// Compiled filter sets are cached by spec identity for the process lifetime.
std::shared_ptr<const FilterSet> compile(const MeterSpec& spec);

// A non-determinate final weight is accepted if either reading matches.
// Raises Error(TooLong) when the string is longer than the meter.
bool prefix_ok(const FilterSet& filters, const WeightString& w);

enum class VerdictKind : std::uint8_t { Full, Partial, Invalid };

std::string_view to_string(VerdictKind kind);

struct Verdict {
  VerdictKind kind = VerdictKind::Invalid;
  std::size_t syllables = 0;
  std::optional<std::size_t> first_violation;  // 1-based position, Partial only
  WeightString weights;                         // Final-mode scansion

  std::string detail() const;
};

Verdict classify(const MeterSpec& spec, const Syllabification& s);
Verdict classify(const MeterSpec& spec, std::string_view text);

struct MeterReport {
  std::size_t total = 0;
  std::size_t full = 0;
  std::size_t partial = 0;  // exact-length verses that break a constraint
  std::size_t invalid = 0;  // includes unparseable entries
  std::vector<std::size_t> unparseable;  // indices into the corpus
  double full_pct = 0.0;
  double partial_pct = 0.0;  // Full plus Partial
};

// Raises Error(EmptyCorpus) on an empty input.
MeterReport report(const MeterSpec& spec, std::span<const std::string> corpus);

}  // namespace chandas
