#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "evorl/algo/factory.hpp"
#include "evorl/genop/extract.hpp"
#include "evorl/genop/genome.hpp"
#include "evorl/genop/lint.hpp"
#include "evorl/genop/llm.hpp"
#include "evorl/genop/operator.hpp"
#include "evorl/genop/prompt.hpp"

using namespace evorl;
using namespace evorl::genop;
namespace fs = std::filesystem;

namespace {

const char* const kMinimal = R"(class NewAlgo:
    def __init__(self, obs_dim, act_dim):
        self.lr = 0.001

    def predict(self, obs):
        return 0

    def learn(self, batch):
        return self._update(batch)

    def compute_loss(self, batch):
        loss = 0.0
        return loss

    def _update(self, batch):
        return self.compute_loss(batch)
)";

std::string fenced(const std::string& src, const std::string& lang = "python") { return "```" + lang + "\n" + src + "```\n"; }

struct ScriptedTransport : Transport {
  std::vector<HttpResponse> replies;
  std::vector<std::string> bodies;
  std::size_t next = 0;
  HttpResponse post(const std::string&, const std::string& body, const Headers&) override {
    bodies.push_back(body);
    return replies.at(std::min(next++, replies.size() - 1));
  }
};

std::string chat_reply(const std::string& text) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

ProviderConfig provider() {
  ProviderConfig p;
  p.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  p.model = "stub";
  p.backoff_s = 0.5;
  return p;
}

fs::path tmpfile(const std::string& name) {
  return fs::temp_directory_path() / ("evorl_genop_" + name + "_" + std::to_string(::getpid()));
}

}  // namespace

TEST_SUITE("formulas") {
  TEST_CASE("macro prompt embeds the parent") {
    const Templates t = load_templates();
    OperatorRequest r;
    r.parent1 = find_genome("cgfpd").source;
    r.metrics = "loss falling";
    const auto msgs = build_prompt(r, t);
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].role == "system");
    CHECK(msgs[1].content.find(r.parent1) != std::string::npos);
    CHECK(msgs[1].content.find("{Your_Algorithm}") == std::string::npos);
    CHECK(msgs[1].content.find("loss falling") != std::string::npos);
  }

  TEST_CASE("crossover prompt embeds both parents") {
    const Templates t = load_templates();
    OperatorRequest r;
    r.op = VariationKind::kCrossover;
    r.parent1 = find_genome("cgfpd").source;
    r.parent2 = find_genome("dfcwpcp").source;
    const auto msgs = build_prompt(r, t);
    CHECK(msgs[1].content.find(r.parent1) != std::string::npos);
    CHECK(msgs[1].content.find(*r.parent2) != std::string::npos);
    CHECK(msgs[1].content.find("{Your_Algorithm}") == std::string::npos);
  }

  TEST_CASE("stub provider returns its block") {
    auto tr = std::make_shared<ScriptedTransport>();
    tr->replies = {{200, chat_reply(fenced(kMinimal)), ""}};
    LlmClient c(provider(), tr, [](auto) {});
    CHECK(c.complete({{"user", "hi"}}) == fenced(kMinimal));
  }

  TEST_CASE("two transient failures then success") {
    auto tr = std::make_shared<ScriptedTransport>();
    tr->replies = {{503, "", ""}, {0, "", "connection refused"}, {200, chat_reply("ok"), ""}};
    std::vector<double> waits;
    LlmClient c(provider(), tr, [&](std::chrono::duration<double> d) { waits.push_back(d.count()); });
    const fs::path log = tmpfile("retry.jsonl");
    fs::remove(log);
    CHECK(c.complete({{"user", "hi"}}, log) == "ok");
    CHECK(tr->bodies.size() == 3);
    CHECK(waits == std::vector<double>{0.5, 1.0});
    std::ifstream in(log);
    CHECK(nlohmann::json::parse(in)["attempts"].size() == 3);
    fs::remove(log);
  }

  TEST_CASE("four failures surface an error") {
    auto tr = std::make_shared<ScriptedTransport>();
    tr->replies = {{429, "", ""}};
    LlmClient c(provider(), tr, [](auto) {});
    CHECK_THROWS_AS(c.complete({{"user", "hi"}}), LlmError);
    CHECK(tr->bodies.size() == 4);
  }

  TEST_CASE("extraction of a well-formed response") {
    const auto e = extract_candidate("Here is the rule.\n" + fenced(kMinimal) + "Thanks.");
    CHECK(e.source == kMinimal);
    CHECK(e.loss_span.find("def compute_loss") != std::string::npos);
  }

  TEST_CASE("class must be NewAlgo") {
    std::string wrong = kMinimal;
    wrong.replace(wrong.find("NewAlgo"), 7, "MyAlgo");
    try {
      extract_candidate(fenced(wrong));
      FAIL("expected ExtractError");
    } catch (const ExtractError& e) {
      CHECK(std::string(e.what()).find("class must be NewAlgo") != std::string::npos);
    }
  }

  TEST_CASE("last complete block wins") {
    std::string other = kMinimal;
    other.replace(other.find("0.001"), 5, "0.5");
    CHECK(extract_candidate(fenced(kMinimal) + "\nrevised:\n" + fenced(other)).source == other);
    CHECK(extract_candidate(fenced(other) + "\n```python\nclass NewAlgo:\n").source == other);
    CHECK(extract_candidate("python '''\n" + std::string(kMinimal) + "'''").source == kMinimal);
  }

  TEST_CASE("deny-list finds td_target") {
    const auto r = lint_constraints("    td_target = r + 0.99 * v\n");
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].rule == "td_target");
    CHECK(r.violations[0].line == 1);
    CHECK(lint_constraints(find_genome("cgfpd").source).ok());
  }

  TEST_CASE("mock operator is seeded") {
    MockOperator op;
    OperatorRequest r;
    r.parent1 = find_genome("cgfpd").source;
    Rng a(5), b(5);
    CHECK(op.vary(r, a, {}) == op.vary(r, b, {}));
    Rng c(6), d(6);
    CHECK(op.initial(c, {}) == op.initial(d, {}));
  }

  TEST_CASE("macro changes exactly one block") {
    const std::string parent = find_genome("dfcwpcp").source;
    MockOperator op;
    OperatorRequest r;
    r.parent1 = parent;
    for (std::uint64_t s = 0; s < 25; ++s) {
      Rng rng(s);
      const std::string child = extract_candidate(op.vary(r, rng, {})).source;
      const auto pb = find_blocks(parent), cb = find_blocks(child);
      REQUIRE(pb.size() == cb.size());
      int changed = 0;
      for (std::size_t i = 0; i < pb.size(); ++i) {
        CHECK(pb[i].name == cb[i].name);
        changed += block_body(parent, pb[i]) != block_body(child, cb[i]);
      }
      CHECK(changed == 1);
    }
  }

  TEST_CASE("crossover interleaves blocks") {
    const std::string a = find_genome("cgfpd").source;
    Rng rng(1);
    const std::string b = MockOperator::perturb_block(MockOperator::perturb_block(MockOperator::perturb_block(a, rng), rng), rng);
    const std::string child = MockOperator::cross(a, b);
    const auto ba = find_blocks(a), bb = find_blocks(b), bc = find_blocks(child);
    REQUIRE(bc.size() == ba.size());
    for (std::size_t i = 0; i < bc.size(); ++i) {
      const auto& from = i % 2 == 0 ? a : b;
      const auto& blocks = i % 2 == 0 ? ba : bb;
      CHECK(block_body(child, bc[i]) == block_body(from, blocks[i]));
    }
    MockOperator op;
    OperatorRequest r;
    r.op = VariationKind::kCrossover;
    r.parent1 = a;
    r.parent2 = b;
    CHECK(extract_candidate(op.vary(r, rng, {})).source == child);
  }
}

TEST_CASE("slot filling") {
  CHECK(fill_slots("a {X} b {Y_z}", {{"X", "1"}, {"Y_z", "{X}"}}) == "a 1 b {X}");
  CHECK(fill_slots("json {\"k\": 1} and {lower}", {}) == "json {\"k\": 1} and {lower}");
  CHECK_THROWS_AS(fill_slots("{Missing}", {}), std::invalid_argument);
}

TEST_CASE("prompt argument errors") {
  const Templates t = load_templates();
  OperatorRequest r;
  r.op = VariationKind::kCrossover;
  r.parent1 = "x";
  CHECK_THROWS(build_prompt(r, t));
  r.parent2 = "x";
  CHECK_THROWS(build_prompt(r, t));
  OperatorRequest m;
  m.parent1 = "x";
  m.parent2 = "y";
  CHECK_THROWS(build_prompt(m, t));
  OperatorRequest e;
  e.parent1 = "x";
  e.environment = "CartPole-v1: obs 4";
  const auto msgs = build_prompt(e, t);
  CHECK(msgs[0].content.find("CartPole-v1: obs 4") != std::string::npos);
  CHECK(msgs[1].content.find("None") != std::string::npos);
}

TEST_CASE("template override directory") {
  const fs::path dir = tmpfile("templates");
  fs::create_directories(dir / "templates");
  std::ofstream(dir / "templates" / "macro.txt") << "custom {Your_Algorithm} {Metrics} {Fitness} {Errors}";
  const Templates t = load_templates(dir);
  CHECK(t.macro.rfind("custom", 0) == 0);
  CHECK(t.system == load_templates().system);
  fs::remove_all(dir);
}

TEST_CASE("extraction failures") {
  CHECK_THROWS_AS(extract_candidate("no code"), ExtractError);
  std::string missing = kMinimal;
  missing.replace(missing.find("def predict"), 11, "def predikt");
  CHECK_THROWS_AS(extract_candidate(fenced(missing)), ExtractError);
  CHECK_THROWS_AS(extract_candidate(fenced(std::string(kMinimal) + "\nclass NewAlgo:\n    pass\n")), ExtractError);
}

TEST_CASE("provider config and request shape") {
  ProviderConfig p;
  CHECK_THROWS(p.validate());
  p = provider();
  p.token_env = "EVORL_TEST_TOKEN_UNSET_123";
  CHECK_THROWS(p.validate());
  const auto body = nlohmann::json::parse(completion_request_json({{"user", "hi"}}, provider()));
  CHECK(body.at("model") == "stub");
  CHECK(body.at("messages").at(0).at("content") == "hi");
  CHECK_THROWS_AS(completion_text("{}"), LlmError);
  auto tr = std::make_shared<ScriptedTransport>();
  tr->replies = {{400, "bad request", ""}};
  LlmClient c(provider(), tr, [](auto) {});
  CHECK_THROWS_AS(c.complete({{"user", "hi"}}), LlmError);
  CHECK(tr->bodies.size() == 1);
}

TEST_CASE("blocks and knobs") {
  const std::string src =
      "class NewAlgo:\n    # <<block:a>>\n    self.x = 3\n    self.y = 0.25\n    # <<end>>\n    self.z = 9\n"
      "    # <<block:b>>\n    self.w = 1e-3\n    # <<end>>\n";
  const auto blocks = find_blocks(src);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].name == "a");
  const auto knobs = find_knobs(src);
  REQUIRE(knobs.size() == 3);
  CHECK(knobs[0].integer);
  CHECK_FALSE(knobs[1].integer);
  CHECK(knob_values(src).count("z") == 0);
  const std::string edited = with_knobs(src, {{"x", 4.6}, {"w", 0.002}});
  CHECK(knob_values(edited).at("x") == 5.0);
  CHECK(knob_values(edited).at("w") == 0.002);
  CHECK(knob_values(edited).at("y") == 0.25);
  CHECK(edited.size() == src.size() + 1);
  CHECK_THROWS(with_knobs(src, {{"z", 1.0}}));
  CHECK(replace_block(src, "b", "    pass\n").find("self.w") == std::string::npos);
  CHECK_THROWS(find_blocks("# <<block:a>>\n# <<block:b>>\n# <<end>>\n# <<end>>\n"));
  CHECK_THROWS(find_blocks("# <<block:a>>\n"));
  CHECK(format_number(0.1, false) == "0.1");
  CHECK(format_number(3.0, false) == "3.0");
  CHECK(format_number(2.6, true) == "3");
}

TEST_CASE("genome library") {
  std::set<std::string> names;
  for (const auto& g : genome_library()) {
    names.insert(g.name);
    CHECK(lint_constraints(g.source).ok());
    CHECK_NOTHROW(extract_candidate(fence(g.source)));
    CHECK(algo::is_algorithm(algorithm_of(g.source)));
    const auto reg = knob_registry(g.source);
    CHECK(reg.size() == knob_values(g.source).size());
  }
  CHECK(names.count("cgfpd"));
  CHECK(names.count("dfcwpcp"));
  CHECK(all_genomes().size() == genome_library().size() + 1);
  CHECK_THROWS(find_genome("nope"));
}

TEST_CASE("deny-list parsing") {
  const auto rules = parse_deny_list("# c\n\nfoo (?i)bar\nbaz qux\n");
  REQUIRE(rules.size() == 2);
  CHECK(lint_constraints("BAR", rules).violations.size() == 1);
  CHECK(lint_constraints("QUX", rules).ok());
  CHECK_THROWS(parse_deny_list("lonely\n"));
  CHECK(lint_constraints("adv = returns - values", default_deny_list()).ok());
  CHECK_FALSE(lint_constraints("advantages = r - v", default_deny_list()).ok());
}
