#include "chandas/meter.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "chandas/error.hpp"

namespace chandas {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

PositionConstraint constraint_from_char(char c, std::size_t offset) {
  switch (c) {
    case '.': return PositionConstraint::Any;
    case 'l': return PositionConstraint::MustLaghu;
    case 'g': return PositionConstraint::MustGuru;
    default:
      throw Error(ErrorCode::InvalidArgument,
                  std::string("constraint characters are '.', 'l', 'g'; got '") + c + "'", offset);
  }
}

std::size_t parse_count(std::string_view value, std::string_view key) {
  std::size_t n = 0;
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string(key) + " is empty");
  for (char c : value) {
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be a positive integer");
    }
    n = n * 10 + static_cast<std::size_t>(c - '0');
  }
  return n;
}

void append_run(std::string& out, std::size_t dots) {
  if (dots == 1) {
    out += '.';
  } else if (dots > 1) {
    out += ".{" + std::to_string(dots) + "}";
  }
}

}  // namespace

char to_char(PositionConstraint c) {
  switch (c) {
    case PositionConstraint::Any: return '.';
    case PositionConstraint::MustLaghu: return 'l';
    case PositionConstraint::MustGuru: return 'g';
  }
  return '?';
}

bool admits(PositionConstraint c, Weight w) {
  switch (c) {
    case PositionConstraint::Any: return true;
    case PositionConstraint::MustLaghu: return w == Weight::Laghu;
    case PositionConstraint::MustGuru: return w == Weight::Guru;
  }
  return false;
}

std::string MeterSpec::constraint_string() const {
  std::string out;
  out.reserve(constraints.size());
  for (auto c : constraints) out.push_back(to_char(c));
  return out;
}

void MeterSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "meter name is empty");
  if (pada_count == 0 || pada_len == 0) {
    throw Error(ErrorCode::InvalidArgument, "pada_count and pada_len must be positive");
  }
  if (constraints.size() != total()) {
    throw Error(ErrorCode::InvalidArgument,
                "meter '" + name + "' has " + std::to_string(constraints.size()) +
                    " constraints, expected " + std::to_string(total()));
  }
}

MeterSpec anustubh() {
  MeterSpec spec;
  spec.name = "anustubh";
  spec.pada_count = 4;
  spec.pada_len = 8;
  spec.constraints.assign(32, PositionConstraint::Any);
  for (std::size_t pada = 0; pada < 4; ++pada) {
    const std::size_t base = pada * 8;
    spec.constraints[base + 4] = PositionConstraint::MustLaghu;
    spec.constraints[base + 5] = PositionConstraint::MustGuru;
    spec.constraints[base + 6] =
        pada % 2 == 0 ? PositionConstraint::MustGuru : PositionConstraint::MustLaghu;
  }
  return spec;
}

MeterSpec parse_meter_spec(std::string_view text) {
  MeterSpec spec;
  bool have_name = false, have_count = false, have_len = false, have_constraints = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::FormatError, "expected key = value", line_no);
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "name") {
      spec.name = std::string(value);
      have_name = true;
    } else if (key == "pada_count") {
      spec.pada_count = parse_count(value, key);
      have_count = true;
    } else if (key == "pada_len") {
      spec.pada_len = parse_count(value, key);
      have_len = true;
    } else if (key == "constraints") {
      spec.constraints.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        spec.constraints.push_back(constraint_from_char(value[i], i));
      }
      have_constraints = true;
    } else {
      throw Error(ErrorCode::FormatError, "unknown meter field '" + std::string(key) + "'", line_no);
    }
  }
  if (!(have_name && have_count && have_len && have_constraints)) {
    throw Error(ErrorCode::FormatError,
                "meter file needs name, pada_count, pada_len and constraints");
  }
  spec.validate();
  return spec;
}

MeterSpec load_meter_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open meter file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_meter_spec(buf.str());
}

std::string format_meter_spec(const MeterSpec& spec) {
  return "name = " + spec.name + "\npada_count = " + std::to_string(spec.pada_count) +
         "\npada_len = " + std::to_string(spec.pada_len) +
         "\nconstraints = " + spec.constraint_string() + "\n";
}

MeterSpec resolve_meter(std::string_view name_or_path) {
  if (name_or_path == "anustubh" || name_or_path == "anushtubh" || name_or_path == "sloka") {
    return anustubh();
  }
  const std::filesystem::path direct(name_or_path);
  if (std::filesystem::is_regular_file(direct)) return load_meter_spec(direct);
  if (const char* env = std::getenv("CHANDAS_METER_PATH")) {
    std::string_view dirs(env);
    while (true) {
      const auto colon = dirs.find(':');
      const auto dir = dirs.substr(0, colon);
      if (!dir.empty()) {
        const auto candidate = std::filesystem::path(dir) / (std::string(name_or_path) + ".meter");
        if (std::filesystem::is_regular_file(candidate)) return load_meter_spec(candidate);
      }
      if (colon == std::string_view::npos) break;
      dirs.remove_prefix(colon + 1);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown meter '" + std::string(name_or_path) + "'");
}

WeightPattern WeightPattern::compile(std::string_view pattern) {
  WeightPattern out;
  out.source_ = std::string(pattern);
  if (pattern.size() < 2 || pattern.front() != '^' || pattern.back() != '$') {
    throw Error(ErrorCode::InvalidArgument, "weight pattern must be anchored with ^ and $");
  }
  const std::string_view body = pattern.substr(1, pattern.size() - 2);
  for (std::size_t i = 0; i < body.size();) {
    const PositionConstraint atom = constraint_from_char(body[i], i + 1);
    ++i;
    std::size_t repeat = 1;
    if (i < body.size() && body[i] == '{') {
      const auto close = body.find('}', i);
      if (close == std::string_view::npos) {
        throw Error(ErrorCode::InvalidArgument, "unterminated repetition", i + 1);
      }
      repeat = parse_count(body.substr(i + 1, close - i - 1), "repetition");
      i = close + 1;
    }
    out.atoms_.insert(out.atoms_.end(), repeat, atom);
  }
  return out;
}

bool WeightPattern::matches(std::span<const Weight> weights) const {
  if (weights.size() != atoms_.size()) return false;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!admits(atoms_[i], weights[i])) return false;
  }
  return true;
}

std::string prefix_pattern(const MeterSpec& spec, std::size_t length) {
  std::string out = "^";
  for (std::size_t start = 0; start < length; start += spec.pada_len) {
    const std::size_t end = std::min(length, start + spec.pada_len);
    std::size_t dots = 0;
    for (std::size_t i = start; i < end; ++i) {
      const auto c = spec.constraints[i];
      if (c == PositionConstraint::Any) {
        ++dots;
        continue;
      }
      append_run(out, dots);
      dots = 0;
      out.push_back(to_char(c));
    }
    append_run(out, dots);
  }
  out += '$';
  return out;
}

FilterSet::FilterSet(MeterSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  filters_.reserve(spec_.total());
  for (std::size_t len = 1; len <= spec_.total(); ++len) {
    filters_.push_back(WeightPattern::compile(prefix_pattern(spec_, len)));
  }
}

std::shared_ptr<const FilterSet> compile(const MeterSpec& spec) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const FilterSet>> cache;
  const std::string key = format_meter_spec(spec);
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) slot = std::make_shared<const FilterSet>(spec);
  return slot;
}

bool prefix_ok(const FilterSet& filters, const WeightString& w) {
  if (w.size() > filters.max_length()) {
    throw Error(ErrorCode::TooLong, "weight string of length " + std::to_string(w.size()) +
                                        " exceeds meter length " +
                                        std::to_string(filters.max_length()));
  }
  if (w.empty()) return true;
  const WeightPattern& filter = filters.filter(w.size());
  if (filter.matches(w.weights)) return true;
  if (w.last_determinate) return false;
  std::vector<Weight> flipped = w.weights;
  flipped.back() = flipped.back() == Weight::Laghu ? Weight::Guru : Weight::Laghu;
  return filter.matches(flipped);
}

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Full: return "Full";
    case VerdictKind::Partial: return "Partial";
    case VerdictKind::Invalid: return "Invalid";
  }
  return "?";
}

std::string Verdict::detail() const {
  switch (kind) {
    case VerdictKind::Full: return "all constraints met";
    case VerdictKind::Partial:
      return "constraint violated at position " + std::to_string(first_violation.value_or(0));
    case VerdictKind::Invalid: return std::to_string(syllables) + " syllables";
  }
  return {};
}

Verdict classify(const MeterSpec& spec, const Syllabification& s) {
  Verdict v;
  v.syllables = s.size();
  v.weights = weigh(s, WeighMode::Final);
  if (v.syllables != spec.total()) {
    v.kind = VerdictKind::Invalid;
    return v;
  }
  for (std::size_t i = 0; i < spec.total(); ++i) {
    if (!admits(spec.constraints[i], v.weights.weights[i])) {
      v.kind = VerdictKind::Partial;
      v.first_violation = i + 1;
      return v;
    }
  }
  v.kind = VerdictKind::Full;
  return v;
}

Verdict classify(const MeterSpec& spec, std::string_view text) {
  return classify(spec, syllabify(text));
}

MeterReport report(const MeterSpec& spec, std::span<const std::string> corpus) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot report on an empty corpus");
  MeterReport r;
  r.total = corpus.size();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    try {
      switch (classify(spec, corpus[i]).kind) {
        case VerdictKind::Full: ++r.full; break;
        case VerdictKind::Partial: ++r.partial; break;
        case VerdictKind::Invalid: ++r.invalid; break;
      }
    } catch (const Error&) {
      ++r.invalid;
      r.unparseable.push_back(i);
    }
  }
  const auto n = static_cast<double>(r.total);
  r.full_pct = 100.0 * static_cast<double>(r.full) / n;
  r.partial_pct = 100.0 * static_cast<double>(r.full + r.partial) / n;
  return r;
}

}  // namespace chandas
