#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chandas/cli.hpp"
#include "chandas/eval.hpp"
#include "chandas/mask_service.hpp"
#include "chandas/net.hpp"
#include "chandas/reports.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace chandas;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CHANDAS_FIXTURE_DIR;
const fs::path kCorpus = fs::path(CHANDAS_DATA_DIR) / "corpus" / "anustubh.jsonl";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "chandas_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

const fs::path& model_file() {
  static const fs::path path = [] {
    const auto p = scratch("model.json");
    REQUIRE(invoke({"train-lm", "--corpus", kCorpus.string(), "--out", p.string()}).code == 0);
    return p;
  }();
  return path;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("scan of the worked pada") {
  const auto r = invoke({"scan", "--text", "mā viṣādaṃ mahābāho", "--script", "iast", "--json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["weights"] == "glgglggg");
  CHECK(j["count"] == 8);
  CHECK(j == json::parse(reports::scan_json("mā viṣādaṃ mahābāho", Script::Iast)));
  const auto plain = invoke({"scan", "--text", "mā viṣādaṃ mahābāho"});
  CHECK(plain.out.rfind("glgglggg\t8\t", 0) == 0);
}

TEST_CASE("syllabify and scan over a file match the library line by line") {
  const auto path = scratch("lines.txt");
  std::ofstream(path) << "रामो वनम्\n\nmā viṣādaṃ\r\n";
  const auto r = invoke({"syllabify", "--file", path.string(), "--json"});
  REQUIRE(r.code == 0);
  const auto ls = lines_of(r.out);
  REQUIRE(ls.size() == 2);
  CHECK(json::parse(ls[0]) == json::parse(reports::syllabify_json("रामो वनम्", Script::Devanagari)));
  CHECK(json::parse(ls[1]) == json::parse(reports::syllabify_json("mā viṣādaṃ", Script::Iast)));
  const auto s = invoke({"scan", "--file", path.string(), "--meter", "anustubh", "--json"});
  CHECK(json::parse(lines_of(s.out)[0])["verdict"]["kind"] == "Invalid");
}

TEST_CASE("validate and eval report what the library reports") {
  const auto file = (kFixtures / "mixed.jsonl").string();
  const auto expect = eval::to_json(eval::evaluate(eval::ingest(file), anustubh()));
  const auto v = invoke({"validate", "--meter", "anustubh", "--file", file, "--json"});
  REQUIRE(v.code == 0);
  CHECK(json::parse(v.out) == json::parse(expect));
  const auto e = invoke({"eval", "--file", file, "--records"});
  CHECK(json::parse(e.out) == json::parse(expect));
  const auto plain = invoke({"validate", "--file", file});
  CHECK(plain.out.find("full 33.33%  partial 66.67%  invalid 33.33%") != std::string::npos);

  const auto csv = scratch("verdicts.csv");
  CHECK(invoke({"eval", "--file", file, "--csv", csv.string()}).code == 0);
  std::ifstream in(csv);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == eval::to_csv(eval::evaluate(eval::ingest(file), anustubh())));

  const auto tsv = invoke({"validate", "--file", (kFixtures / "vedic.tsv").string(), "--json"});
  CHECK(json::parse(tsv.out)["unparseable"] == json::array({"2"}));
}

TEST_CASE("single verse validation") {
  const auto r = invoke({"validate", "--text",
                      "खरं तु विरथं रामो गदापाणिमवस्थितम् । मृदुपूर्वं महातेजाः परुषं वाक्यमब्रवीत् ॥"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\tFull\t") != std::string::npos);
}

TEST_CASE("train-lm writes a model the library can load") {
  const auto r = invoke({"train-lm", "--corpus", kCorpus.string(), "--out", scratch("m2.json").string(), "--json"});
  REQUIRE(r.code == 0);
  const auto loaded = lm::NgramModel::load(scratch("m2.json"));
  CHECK(json::parse(r.out) == json::parse(reports::model_json(loaded)));
  CHECK(json::parse(r.out)["order"] == 4);
}

TEST_CASE("generate is deterministic and matches the library") {
  const std::vector<std::string> args{"generate", "--meter", "anustubh", "--lm", model_file().string(),
                                      "--sampler", "greedy", "--seed", "7", "--json"};
  const auto a = invoke(args);
  const auto b = invoke(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  auto model = lm::NgramModel::load(model_file());
  decode::DecodeConfig c;
  c.seed = 7;
  const auto g = decode::generate(model, anustubh(), c);
  CHECK(a.out == reports::generation_json(g, false) + "\n");
  CHECK(json::parse(a.out)["verdict"] == "Full");
  CHECK_FALSE(json::parse(a.out)["stats"].contains("latency_mean_s"));

  const auto timed = invoke({"generate", "--lm", model_file().string(), "--timing", "--json"});
  CHECK(json::parse(timed.out)["stats"].contains("throughput_tok_s"));
}

TEST_CASE("generate output feeds eval") {
  const auto gens = scratch("gens.jsonl");
  const auto r = invoke({"generate", "--lm", model_file().string(), "--sampler", "multinomial", "--n", "10", "--json"});
  REQUIRE(r.code == 0);
  std::ofstream(gens) << r.out;
  const auto e = invoke({"eval", "--generations", gens.string()});
  REQUIRE(e.code == 0);
  const auto j = json::parse(e.out);
  CHECK(j["full_pct"] == 100.0);
  CHECK(j["generation"]["runs"] == 10);
}

TEST_CASE("generate --record writes replayable sessions") {
  const auto rec = scratch("sessions.jsonl");
  fs::remove(rec);
  const auto r = invoke({"generate", "--corpus", kCorpus.string(), "--sampler", "topk", "--n", "3", "--record",
                      rec.string()});
  REQUIRE(r.code == 0);
  const auto sessions = mask::read_sessions(rec);
  REQUIRE(sessions.size() == 3);
  for (const auto& s : sessions) {
    mask::MaskSession m(resolve_meter(s.meter));
    for (const auto& step : s.steps) {
      CHECK(m.survivors(step.candidates) == step.survivors);
      m.accept(step.accepted);
    }
    CHECK(m.state().complete());
  }
}

TEST_CASE("bench reports its configuration") {
  const auto r = invoke({"bench", "--lm", model_file().string(), "--n", "3", "--k-init", "10", "--cache-size", "0"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["generations"] == 3);
  CHECK(j["k_init"] == 10);
  CHECK(j["cache_hit_rate"] == 0.0);
  CHECK(j["throughput_tok_s"].get<double>() > 0);
}

TEST_CASE("meters are found through CHANDAS_METER_PATH") {
  const auto dir = fs::temp_directory_path() / "chandas_meters";
  fs::create_directories(dir);
  std::ofstream(dir / "half.meter") << "name = half\npada_count = 2\npada_len = 8\n"
                                       "constraints = ....lgg.....lgl.\n";
  CHECK(invoke({"scan", "--text", "x", "--meter", "half"}).code == 2);
  setenv("CHANDAS_METER_PATH", dir.c_str(), 1);
  const auto r = invoke({"validate", "--meter", "half", "--text", "खरं तु विरथं रामो गदापाणिमवस्थितम्"});
  unsetenv("CHANDAS_METER_PATH");
  CHECK(r.code == 0);
  CHECK(r.out.find("\tFull\t") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"bogus"}).code == 2);
  CHECK(invoke({"scan", "--nope"}).code == 2);
  CHECK(invoke({"scan"}).code == 2);
  CHECK(invoke({"validate", "--file", "/no/such/file.jsonl"}).code == 2);
  CHECK(invoke({"generate", "--sampler", "beam", "--lm", model_file().string()}).code == 2);
  CHECK(invoke({"generate", "--lm", model_file().string(), "--k-init", "5000"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);

  const auto bad = scratch("bad.jsonl");
  std::ofstream(bad) << "{\"sanskrit\":\"क\"}\n{oops\n";
  const auto f = invoke({"validate", "--file", bad.string()});
  CHECK(f.code == 1);
  CHECK(f.err.find("line 2") != std::string::npos);

  const auto d = invoke({"generate", "--lm", model_file().string(), "--k-init", "1", "--k-max", "1"});
  CHECK(d.code == 1);
  CHECK(d.err.find("dead end") != std::string::npos);

  CHECK(invoke({"scan", "--text", "क॑"}).code == 1);
}

TEST_CASE("serve-mask over stdio in a child process") {
  auto ch = net::spawn({CHANDAS_TOOL, "serve-mask", "--stdio"});
  const auto ask = [&](const json& frame) {
    ch->send(frame.dump());
    return json::parse(ch->receive(std::chrono::seconds(10)).value());
  };
  CHECK(ask({{"type", "hello"}})["max_syllables"] == 32);
  for (int i = 0; i < 4; ++i) CHECK(ask({{"type", "accept"}, {"token", "क"}})["type"] == "state");
  CHECK(ask({{"type", "mask"}, {"candidates", {"का", "क"}}})["indices"] == json::array({1}));
  ch->send(json{{"type", "bye"}}.dump());
  CHECK_FALSE(ch->receive(std::chrono::seconds(10)).has_value());
}
