#include "chandas/cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "chandas/decode.hpp"
#include "chandas/error.hpp"
#include "chandas/eval.hpp"
#include "chandas/lm_protocol.hpp"
#include "chandas/mask_service.hpp"
#include "chandas/reports.hpp"
#include "json.hpp"

namespace chandas::cli {
namespace {

using json = nlohmann::json;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct TextInput {
  std::string text;
  std::string file;
  std::string script = "auto";

  void add(CLI::App* cmd) {
    auto* t = cmd->add_option("--text", text, "Verse text");
    auto* f = cmd->add_option("--file", file, "One verse per line")->check(CLI::ExistingFile);
    t->excludes(f);
    cmd->add_option("--script", script, "Input script")
        ->check(CLI::IsMember({"auto", "devanagari", "iast"}));
  }

  std::vector<std::string> lines() const {
    if (file.empty()) return {text};
    std::ifstream in(file);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(line);
    }
    return out;
  }

  Script script_for(std::string_view s) const {
    return script == "auto" ? detect_script(s) : *script_from_string(script);
  }
};

struct DecoderOptions {
  std::string meter = "anustubh";
  std::string lm_file;
  std::string lm_tcp;
  std::string corpus;
  std::size_t order = lm::NgramModel::kDefaultOrder;
  std::size_t k_init = 25;
  std::optional<std::size_t> k_max;
  double k_growth = 2.0;
  std::string sampler = "greedy";
  double temperature = 0.7;
  double top_p = 0.9;
  std::size_t top_k = 10;
  double alpha = 0.6;
  std::size_t contrastive_k = 4;
  std::uint64_t seed = 0;
  std::size_t cache_size = 1000;
  bool no_mask = false;
  bool timing = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--meter", meter, "Builtin meter name or spec file");
    auto* a = cmd->add_option("--lm", lm_file, "Saved n-gram model")->check(CLI::ExistingFile);
    auto* b = cmd->add_option("--lm-tcp", lm_tcp, "host:port of an LM server");
    auto* c = cmd->add_option("--corpus", corpus, "Train an n-gram model on this corpus first")
                  ->check(CLI::ExistingFile);
    a->excludes(b, c);
    b->excludes(c);
    cmd->add_option("--order", order, "n-gram order with --corpus")->check(CLI::Range(1, 16));
    cmd->add_option("--k-init", k_init)->check(CLI::PositiveNumber);
    cmd->add_option("--k-max", k_max)->check(CLI::PositiveNumber);
    cmd->add_option("--k-growth", k_growth);
    cmd->add_option("--sampler", sampler)
        ->check(CLI::IsMember({"greedy", "multinomial", "nucleus", "topk", "contrastive"}));
    cmd->add_option("--temperature", temperature);
    cmd->add_option("--top-p", top_p);
    cmd->add_option("--top-k", top_k);
    cmd->add_option("--alpha", alpha);
    cmd->add_option("--contrastive-k", contrastive_k);
    cmd->add_option("--seed", seed);
    cmd->add_option("--cache-size", cache_size);
    cmd->add_flag("--no-mask", no_mask, "Skip the meter checks before sampling");
    cmd->add_flag("--timing", timing, "Include latency and throughput");
  }

  decode::DecodeConfig config() const {
    decode::DecodeConfig c;
    c.k_init = k_init;
    c.k_max = k_max;
    c.k_growth = k_growth;
    c.sampler.kind = *decode::sampler_from_string(sampler);
    c.sampler.temperature = temperature;
    c.sampler.top_p = top_p;
    c.sampler.top_k = top_k;
    c.sampler.alpha = alpha;
    c.sampler.contrastive_k = contrastive_k;
    c.sampler.validate();
    c.seed = seed;
    c.cache_capacity = cache_size;
    c.mask_enabled = !no_mask;
    return c;
  }
};

std::vector<std::string> corpus_texts(const std::string& path, const std::string& format) {
  const auto fmt = format.empty() ? eval::format_for_path(path) : *eval::format_from_string(format);
  std::vector<std::string> texts;
  for (const auto& r : eval::ingest(path, fmt)) {
    if (r.parseable) texts.push_back(r.sanskrit);
  }
  return texts;
}

std::unique_ptr<lm::LanguageModel> load_model(const DecoderOptions& o) {
  if (!o.lm_file.empty()) return std::make_unique<lm::NgramModel>(lm::NgramModel::load(o.lm_file));
  if (!o.corpus.empty()) {
    return std::make_unique<lm::NgramModel>(lm::NgramModel::train(corpus_texts(o.corpus, ""), o.order));
  }
  if (!o.lm_tcp.empty()) {
    const auto colon = o.lm_tcp.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--lm-tcp expects host:port");
    return std::make_unique<lm::RemoteModel>(
        net::connect_tcp(o.lm_tcp.substr(0, colon), std::stoi(o.lm_tcp.substr(colon + 1))));
  }
  throw Error(ErrorCode::InvalidArgument, "one of --lm, --lm-tcp or --corpus is required");
}

void write_csv(const std::string& path, const eval::EvalReport& rep) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << eval::to_csv(rep);
}

int serve_loop(int port, bool stdio, const std::function<void(net::LineChannel&)>& handler,
               std::ostream& out) {
  if (stdio) {
    net::FdChannel ch(0, 1, false);
    handler(ch);
    return 0;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  net::serve_tcp(port, handler, g_stop, [&](int p) {
    out << json{{"port", p}}.dump() << std::endl;
  });
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metre-constrained Sanskrit verse tools", "chandas"};
  app.require_subcommand(1);
  bool as_json = false;

  // syllabify
  auto* syl = app.add_subcommand("syllabify", "Split text into syllables");
  TextInput syl_in;
  syl_in.add(syl);
  syl->add_flag("--json", as_json);

  // scan
  auto* scan = app.add_subcommand("scan", "Laghu/guru weights of each syllable");
  TextInput scan_in;
  scan_in.add(scan);
  std::string scan_meter;
  scan->add_option("--meter", scan_meter, "Also classify against this meter");
  scan->add_flag("--json", as_json);

  // validate
  auto* val = app.add_subcommand("validate", "Classify verses as Full, Partial or Invalid");
  std::string val_meter = "anustubh", val_file, val_text, val_format, val_csv;
  val->add_option("--meter", val_meter);
  auto* vf = val->add_option("--file", val_file, "JSONL or TSV corpus")->check(CLI::ExistingFile);
  val->add_option("--text", val_text)->excludes(vf);
  val->add_option("--format", val_format)->check(CLI::IsMember({"jsonl", "tsv"}));
  val->add_option("--csv", val_csv, "Write per-record verdicts here");
  val->add_flag("--json", as_json);

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluation report over a corpus or generate output");
  std::string ev_meter = "anustubh", ev_file, ev_gens, ev_format, ev_csv;
  ev->add_option("--meter", ev_meter);
  auto* ef = ev->add_option("--file", ev_file, "JSONL or TSV corpus")->check(CLI::ExistingFile);
  ev->add_option("--generations", ev_gens, "JSON lines from generate --json")
      ->check(CLI::ExistingFile)
      ->excludes(ef);
  ev->add_option("--format", ev_format)->check(CLI::IsMember({"jsonl", "tsv"}));
  ev->add_option("--csv", ev_csv, "Write per-record verdicts here");
  bool ev_records = false;
  ev->add_flag("--records", ev_records, "Include per-record verdicts");
  ev->add_flag("--json", as_json, "Accepted for symmetry; output is always JSON");

  // train-lm
  auto* train = app.add_subcommand("train-lm", "Train the reference n-gram model");
  std::string tr_corpus, tr_out, tr_format;
  std::size_t tr_order = lm::NgramModel::kDefaultOrder;
  double tr_smoothing = lm::NgramModel::kDefaultSmoothing;
  train->add_option("--corpus", tr_corpus)->required()->check(CLI::ExistingFile);
  train->add_option("--out", tr_out)->required();
  train->add_option("--order", tr_order)->check(CLI::Range(1, 16));
  train->add_option("--smoothing", tr_smoothing)->check(CLI::PositiveNumber);
  train->add_option("--format", tr_format)->check(CLI::IsMember({"jsonl", "tsv"}));
  train->add_flag("--json", as_json);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate verses under the meter mask");
  DecoderOptions gen_opts;
  gen_opts.add(gen);
  std::size_t gen_n = 1;
  std::string gen_prompt, gen_record;
  gen->add_option("--n", gen_n, "Number of verses; seeds run seed, seed+1, ...")->check(CLI::PositiveNumber);
  gen->add_option("--prompt", gen_prompt, "Opening text");
  gen->add_option("--record", gen_record, "Append decode sessions for replay here");
  gen->add_flag("--json", as_json);

  // bench
  auto* bn = app.add_subcommand("bench", "Latency, throughput and cache statistics");
  DecoderOptions bn_opts;
  bn_opts.add(bn);
  std::size_t bn_n = 100;
  std::string bn_prompts;
  bn->add_option("--n", bn_n)->check(CLI::PositiveNumber);
  bn->add_option("--prompts", bn_prompts, "One prompt per line, used in turn")->check(CLI::ExistingFile);
  bn->add_flag("--json", as_json, "Accepted for symmetry; output is always JSON");

  // serve-mask
  auto* sm = app.add_subcommand("serve-mask", "Answer mask requests from an external decoder");
  std::string sm_meter = "anustubh";
  int sm_port = 0;
  bool sm_stdio = false;
  std::size_t sm_cache = 1000;
  sm->add_option("--meter", sm_meter, "Meter for sessions whose hello names none");
  auto* smp = sm->add_option("--port", sm_port, "TCP port on 127.0.0.1 (0 picks one)");
  sm->add_flag("--stdio", sm_stdio, "Serve one session on stdin/stdout")->excludes(smp);
  sm->add_option("--cache-size", sm_cache);

  // serve-lm
  auto* sl = app.add_subcommand("serve-lm", "Expose an n-gram model over the LM protocol");
  DecoderOptions sl_opts;
  int sl_port = 0;
  bool sl_stdio = false;
  auto* sll = sl->add_option("--lm", sl_opts.lm_file)->check(CLI::ExistingFile);
  sl->add_option("--corpus", sl_opts.corpus)->check(CLI::ExistingFile)->excludes(sll);
  sl->add_option("--order", sl_opts.order)->check(CLI::Range(1, 16));
  auto* slp = sl->add_option("--port", sl_port);
  sl->add_flag("--stdio", sl_stdio)->excludes(slp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (syl->parsed() || scan->parsed()) {
      const auto& in = syl->parsed() ? syl_in : scan_in;
      if (in.text.empty() && in.file.empty()) throw Error(ErrorCode::InvalidArgument, "--text or --file is required");
      std::optional<MeterSpec> meter;
      if (scan->parsed() && !scan_meter.empty()) meter = resolve_meter(scan_meter);
      for (const auto& line : in.lines()) {
        const Script script = in.script_for(line);
        const auto j = json::parse(syl->parsed() ? reports::syllabify_json(line, script)
                                                  : reports::scan_json(line, script, meter ? &*meter : nullptr));
        if (as_json) {
          out << j.dump() << '\n';
          continue;
        }
        std::string joined;
        for (const auto& s : j["syllables"]) joined += (joined.empty() ? "" : " ") + s.get<std::string>();
        if (syl->parsed()) {
          out << joined;
          if (!j["pending"].get<std::string>().empty()) out << " +" << j["pending"].get<std::string>();
          out << '\n';
        } else {
          out << j["weights"].get<std::string>() << '\t' << j["count"] << '\t' << joined;
          if (j.contains("verdict")) out << '\t' << j["verdict"]["kind"].get<std::string>();
          out << '\n';
        }
      }
      return 0;
    }

    if (val->parsed()) {
      const MeterSpec spec = resolve_meter(val_meter);
      std::vector<eval::CorpusRecord> records;
      if (!val_file.empty()) {
        const auto fmt = val_format.empty() ? eval::format_for_path(val_file) : *eval::format_from_string(val_format);
        records = eval::ingest(val_file, fmt);
      } else if (!val_text.empty()) {
        records = eval::ingest_text(json{{"id", "text"}, {"sanskrit", val_text}}.dump(), eval::Format::Jsonl);
      } else {
        throw Error(ErrorCode::InvalidArgument, "--text or --file is required");
      }
      const auto rep = eval::evaluate(records, spec);
      if (!val_csv.empty()) write_csv(val_csv, rep);
      if (as_json) {
        out << eval::to_json(rep) << '\n';
        return 0;
      }
      for (const auto& r : rep.records) {
        out << r.id << '\t' << to_string(r.kind) << '\t' << r.weights;
        if (r.first_violation) out << "\tposition " << *r.first_violation;
        if (!r.parseable) out << "\tunparseable";
        out << '\n';
      }
      out << std::fixed << std::setprecision(2) << "full " << rep.full_pct << "%  partial " << rep.partial_pct
          << "%  invalid " << rep.invalid_pct << "%  (" << rep.total << " records)\n";
      return 0;
    }

    if (ev->parsed()) {
      const MeterSpec spec = resolve_meter(ev_meter);
      eval::EvalReport rep;
      if (!ev_gens.empty()) {
        std::ifstream in(ev_gens);
        std::vector<decode::Generation> runs;
        std::size_t n = 0;
        for (std::string line; std::getline(in, line);) {
          ++n;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          try {
            const auto j = json::parse(line);
            decode::Generation g;
            g.text = j.at("text_devanagari").get<std::string>();
            g.dead_end = j.at("stats").at("dead_end").get<bool>();
            runs.push_back(std::move(g));
          } catch (const json::exception& e) {
            throw Error(ErrorCode::FormatError, "line " + std::to_string(n) + ": " + e.what(), n);
          }
        }
        rep = eval::evaluate_generations(runs, spec);
      } else if (!ev_file.empty()) {
        const auto fmt = ev_format.empty() ? eval::format_for_path(ev_file) : *eval::format_from_string(ev_format);
        rep = eval::evaluate(eval::ingest(ev_file, fmt), spec);
      } else {
        throw Error(ErrorCode::InvalidArgument, "--file or --generations is required");
      }
      if (!ev_csv.empty()) write_csv(ev_csv, rep);
      out << eval::to_json(rep, ev_records) << '\n';
      return 0;
    }

    if (train->parsed()) {
      const auto model = lm::NgramModel::train(corpus_texts(tr_corpus, tr_format), tr_order, tr_smoothing);
      model.save(tr_out);
      out << (as_json ? reports::model_json(model)
                      : "saved " + tr_out + ": order " + std::to_string(model.order()) + ", " +
                            std::to_string(model.vocab().size()) + " tokens")
          << '\n';
      return 0;
    }

    if (gen->parsed()) {
      const MeterSpec spec = resolve_meter(gen_opts.meter);
      auto model = load_model(gen_opts);
      auto config = gen_opts.config();
      const auto prompt = model->vocab().tokenize(gen_prompt);
      std::ofstream record;
      if (!gen_record.empty()) {
        record.open(gen_record, std::ios::app);
        if (!record) throw Error(ErrorCode::IoError, "cannot write " + gen_record);
      }
      bool any_dead_end = false;
      for (std::size_t i = 0; i < gen_n; ++i) {
        config.seed = gen_opts.seed + i;
        mask::SessionRecord session{gen_opts.meter, {}};
        std::function<void(const decode::StepRecord&)> on_step;
        if (record.is_open()) on_step = [&](const decode::StepRecord& r) { session.steps.push_back(r); };
        const auto g = decode::generate(*model, spec, config, prompt, nullptr, on_step);
        if (record.is_open()) record << mask::to_json_line(session) << '\n';
        any_dead_end = any_dead_end || g.dead_end;
        if (as_json) {
          out << reports::generation_json(g, gen_opts.timing) << '\n';
        } else if (g.dead_end) {
          err << "dead end: " << g.dead_end_reason << '\n';
        } else {
          out << g.text << '\n';
        }
      }
      return any_dead_end ? 1 : 0;
    }

    if (bn->parsed()) {
      const MeterSpec spec = resolve_meter(bn_opts.meter);
      auto model = load_model(bn_opts);
      const auto config = bn_opts.config();
      std::vector<std::vector<lm::TokenId>> prompts;
      if (!bn_prompts.empty()) {
        TextInput p;
        p.file = bn_prompts;
        for (const auto& line : p.lines()) prompts.push_back(model->vocab().tokenize(line));
      }
      const auto r = decode::bench(*model, spec, config, bn_n, prompts);
      out << reports::bench_json(r, config, true) << '\n';
      return 0;
    }

    if (sm->parsed()) {
      const MeterSpec fallback = resolve_meter(sm_meter);
      auto cache = std::make_shared<decode::ScanCache>(sm_cache);
      const mask::MeterResolver resolve = [fallback](const std::string& name) {
        return name.empty() ? fallback : resolve_meter(name);
      };
      return serve_loop(sm_port, sm_stdio, [&](net::LineChannel& ch) { mask::serve(ch, cache, resolve); }, out);
    }

    if (sl->parsed()) {
      auto model = load_model(sl_opts);
      return serve_loop(sl_port, sl_stdio, [&](net::LineChannel& ch) { lm::serve(*model, ch); }, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidArgument ? 2 : 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"chandas"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace chandas::cli
