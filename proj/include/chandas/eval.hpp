#pragma once

// Corpus ingestion and metrical evaluation reports.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chandas/decode.hpp"
#include "chandas/meter.hpp"

namespace chandas::eval {

enum class Format { Jsonl, Tsv };

std::optional<Format> format_from_string(std::string_view name);
// .tsv selects Tsv; everything else Jsonl.
Format format_for_path(const std::filesystem::path& path);

struct CorpusRecord {
  std::string id;
  std::string english;
  std::string sanskrit;  // NFC, script as given
  std::size_t line = 0;
  bool parseable = true;
  std::string problem;  // why the verse text does not parse
};

// JSONL rows are {"id","english","sanskrit"}; TSV rows are id, english,
// sanskrit. Blank lines are skipped. Raises Error(FormatError) with the line
// number of the first malformed row and Error(EmptyCorpus) when no rows exist.
std::vector<CorpusRecord> ingest_text(std::string_view content, Format format);
std::vector<CorpusRecord> ingest(const std::filesystem::path& path, Format format);
std::vector<CorpusRecord> ingest(const std::filesystem::path& path);

// SHA-256 over the canonical JSONL form of the records.
std::string corpus_digest(std::span<const CorpusRecord> records);

struct RecordVerdict {
  std::string id;
  std::string english;
  VerdictKind kind = VerdictKind::Invalid;
  std::size_t syllables = 0;
  std::string weights;
  std::optional<std::size_t> first_violation;
  bool parseable = true;
};

struct GenerationAggregate {
  std::size_t runs = 0;
  std::size_t dead_ends = 0;
  double dead_end_rate = 0;  // percent of runs
  double latency_mean_s = 0;
  double throughput_tok_s = 0;
};

struct EvalReport {
  std::string meter;
  std::size_t total = 0;
  std::size_t full = 0;
  std::size_t partial = 0;  // exact length, some constraint broken
  std::size_t invalid = 0;  // wrong length or unparseable
  std::vector<std::string> unparseable;
  double full_pct = 0;
  double partial_pct = 0;  // Full plus Partial
  double invalid_pct = 0;
  std::string corpus_sha256;
  std::optional<GenerationAggregate> generation;
  std::vector<RecordVerdict> records;
};

// Raises Error(EmptyCorpus) on empty input.
EvalReport evaluate(std::span<const CorpusRecord> records, const MeterSpec& spec);

// Completed generations are scored as records "gen-0001"...; dead ends are
// counted in the generation aggregate and left out of the percentages.
EvalReport evaluate_generations(std::span<const decode::Generation> runs, const MeterSpec& spec,
                                bool with_timing = false);

std::string to_json(const EvalReport& report, bool with_records = true);
std::string to_csv(const EvalReport& report);

}  // namespace chandas::eval
