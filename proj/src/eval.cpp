#include "chandas/eval.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "chandas/digest.hpp"
#include "chandas/error.hpp"
#include "chandas/script.hpp"
#include "chandas/unicode.hpp"
#include "json.hpp"

namespace chandas::eval {
namespace {

using json = nlohmann::json;

[[noreturn]] void format_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::FormatError, "line " + std::to_string(line) + ": " + what, line);
}

CorpusRecord make_record(std::string id, std::string english, std::string sanskrit, std::size_t line) {
  CorpusRecord r{unicode::nfc(id), unicode::nfc(english), unicode::nfc(sanskrit), line, true, {}};
  try {
    parse(r.sanskrit);
  } catch (const Error& e) {
    r.parseable = false;
    r.problem = e.what();
  }
  return r;
}

std::vector<std::string> split_tabs(std::string_view row) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = row.find('\t', start);
    out.emplace_back(row.substr(start, tab == std::string_view::npos ? row.npos : tab - start));
    if (tab == std::string_view::npos) return out;
    start = tab + 1;
  }
}

double pct(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::optional<Format> format_from_string(std::string_view name) {
  if (name == "jsonl") return Format::Jsonl;
  if (name == "tsv") return Format::Tsv;
  return std::nullopt;
}

Format format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".tsv" ? Format::Tsv : Format::Jsonl;
}

std::vector<CorpusRecord> ingest_text(std::string_view content, Format format) {
  content = unicode::strip_bom(content);
  std::vector<CorpusRecord> records;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    const auto nl = content.find('\n', start);
    std::string_view row = content.substr(start, nl == content.npos ? content.npos : nl - start);
    start = nl == content.npos ? content.size() : nl + 1;
    ++line_no;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.find_first_not_of(" \t") == row.npos) continue;

    if (format == Format::Tsv) {
      const auto cols = split_tabs(row);
      if (cols.size() != 3) {
        format_error(line_no, "expected 3 tab-separated columns, found " + std::to_string(cols.size()));
      }
      records.push_back(make_record(cols[0], cols[1], cols[2], line_no));
      continue;
    }
    json obj;
    try {
      obj = json::parse(row);
    } catch (const json::exception&) {
      format_error(line_no, "not valid JSON");
    }
    if (!obj.is_object()) format_error(line_no, "expected a JSON object");
    if (!obj.contains("sanskrit") || !obj["sanskrit"].is_string()) {
      format_error(line_no, "missing string field 'sanskrit'");
    }
    std::string id;
    if (obj.contains("id")) id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
    std::string english;
    if (obj.contains("english")) {
      if (!obj["english"].is_string()) format_error(line_no, "field 'english' must be a string");
      english = obj["english"].get<std::string>();
    }
    records.push_back(make_record(id, english, obj["sanskrit"].get<std::string>(), line_no));
  }
  if (records.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no records");
  return records;
}

std::vector<CorpusRecord> ingest(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_text(buf.str(), format);
}

std::vector<CorpusRecord> ingest(const std::filesystem::path& path) {
  return ingest(path, format_for_path(path));
}

std::string corpus_digest(std::span<const CorpusRecord> records) {
  std::string canon;
  for (const auto& r : records) {
    canon += json{{"id", r.id}, {"english", r.english}, {"sanskrit", r.sanskrit}}.dump();
    canon += '\n';
  }
  return sha256_hex(canon);
}

EvalReport evaluate(std::span<const CorpusRecord> records, const MeterSpec& spec) {
  if (records.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot evaluate an empty corpus");
  EvalReport rep;
  rep.meter = spec.name;
  rep.total = records.size();
  for (const auto& r : records) {
    RecordVerdict v{r.id, r.english, VerdictKind::Invalid, 0, {}, std::nullopt, r.parseable};
    if (r.parseable) {
      const auto verdict = classify(spec, r.sanskrit);
      v.kind = verdict.kind;
      v.syllables = verdict.syllables;
      v.weights = verdict.weights.str();
      v.first_violation = verdict.first_violation;
    } else {
      rep.unparseable.push_back(r.id);
    }
    switch (v.kind) {
      case VerdictKind::Full: ++rep.full; break;
      case VerdictKind::Partial: ++rep.partial; break;
      case VerdictKind::Invalid: ++rep.invalid; break;
    }
    rep.records.push_back(std::move(v));
  }
  rep.full_pct = pct(rep.full, rep.total);
  rep.partial_pct = pct(rep.full + rep.partial, rep.total);
  rep.invalid_pct = pct(rep.invalid, rep.total);
  rep.corpus_sha256 = corpus_digest(records);
  return rep;
}

EvalReport evaluate_generations(std::span<const decode::Generation> runs, const MeterSpec& spec,
                                bool with_timing) {
  if (runs.empty()) throw Error(ErrorCode::EmptyCorpus, "no generations to evaluate");
  std::vector<CorpusRecord> completed;
  GenerationAggregate agg;
  std::vector<decode::StepStats> steps;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    ++agg.runs;
    steps.insert(steps.end(), runs[i].steps.begin(), runs[i].steps.end());
    if (runs[i].dead_end) {
      ++agg.dead_ends;
      continue;
    }
    char id[32];
    std::snprintf(id, sizeof id, "gen-%04zu", i + 1);
    completed.push_back(make_record(id, "", runs[i].text, i + 1));
  }
  agg.dead_end_rate = pct(agg.dead_ends, agg.runs);
  if (with_timing) {
    const auto s = decode::summarize(steps);
    agg.latency_mean_s = s.latency_mean_s;
    agg.throughput_tok_s = s.throughput_tok_s;
  }
  EvalReport rep;
  if (completed.empty()) {
    rep.meter = spec.name;
    rep.corpus_sha256 = corpus_digest(completed);
  } else {
    rep = evaluate(completed, spec);
  }
  rep.generation = agg;
  return rep;
}

std::string to_json(const EvalReport& r, bool with_records) {
  json out = {
      {"meter", r.meter},
      {"records", r.total},
      {"full", r.full},
      {"partial", r.partial},
      {"invalid", r.invalid},
      {"unparseable", r.unparseable},
      {"full_pct", round2(r.full_pct)},
      {"partial_pct", round2(r.partial_pct)},
      {"invalid_pct", round2(r.invalid_pct)},
      {"corpus_sha256", r.corpus_sha256},
  };
  if (r.generation) {
    json g = {{"runs", r.generation->runs},
              {"dead_ends", r.generation->dead_ends},
              {"dead_end_rate", round2(r.generation->dead_end_rate)}};
    if (r.generation->throughput_tok_s > 0) {
      g["latency_mean_s"] = r.generation->latency_mean_s;
      g["throughput_tok_s"] = r.generation->throughput_tok_s;
    }
    out["generation"] = g;
  }
  if (with_records) {
    json rows = json::array();
    for (const auto& v : r.records) {
      json row = {{"id", v.id},
                  {"english", v.english},
                  {"verdict", to_string(v.kind)},
                  {"syllables", v.syllables},
                  {"weights", v.weights},
                  {"parseable", v.parseable}};
      if (v.first_violation) row["first_violation"] = *v.first_violation;
      rows.push_back(std::move(row));
    }
    out["verdicts"] = std::move(rows);
  }
  return out.dump(2);
}

std::string to_csv(const EvalReport& r) {
  std::string out = "id,verdict,syllables,weights,first_violation,parseable\n";
  for (const auto& v : r.records) {
    out += csv_field(v.id) + ',' + std::string(to_string(v.kind)) + ',' +
           std::to_string(v.syllables) + ',' + v.weights + ',' +
           (v.first_violation ? std::to_string(*v.first_violation) : "") + ',' +
           (v.parseable ? "true" : "false") + '\n';
  }
  return out;
}

}  // namespace chandas::eval
