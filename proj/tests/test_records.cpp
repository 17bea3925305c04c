#include <doctest.h>

#include <cmath>

#include "latentface/error.hpp"
#include "latentface/records.hpp"
#include "latentface/rng.hpp"
#include "support.hpp"

using namespace latentface;
using latentface::test::AngleEmbedder;
using latentface::test::TempDir;

namespace {

Direction sample_direction() {
  Direction dir;
  dir.delta = sample_latent(3, 64, 0.37).values;
  dir.delta[5] = 1e-300;
  dir.delta[6] = -0.0;
  dir.tap_layer = "dense";
  dir.provenance.prompt = "smiling face | bearded";
  dir.provenance.lambda_id = 0.01;
  dir.provenance.lambda_l2 = 0.001;
  dir.provenance.steps = 100;
  dir.provenance.learning_rate = 0.01;
  dir.provenance.final_clip = 0.7123456789012345;
  dir.provenance.final_id = 1.0 / 3.0;
  dir.provenance.final_l2 = 2.5;
  dir.provenance.final_total = 0.9;
  return dir;
}

RenderSet constant_renders(const std::vector<double>& values) {
  RenderSet set;
  for (double v : values) {
    set.images.push_back(Image(4, 4, 3, v));
  }
  return set;
}

} // namespace

TEST_CASE("direction records round-trip byte for byte") {
  TempDir dir;
  const DirectionRecord record{sample_direction()};
  record.save(dir / "a.txt");
  const DirectionRecord loaded = DirectionRecord::load(dir / "a.txt");
  loaded.save(dir / "b.txt");
  CHECK(test::read_file(dir / "a.txt") == test::read_file(dir / "b.txt"));

  CHECK(loaded.direction.delta == record.direction.delta);
  CHECK(std::signbit(loaded.direction.delta[6]));
  CHECK(loaded.direction.tap_layer == "dense");
  CHECK(loaded.direction.provenance.prompt == "smiling face | bearded");
  CHECK(loaded.direction.provenance.final_id == 1.0 / 3.0);
  CHECK(loaded.direction.provenance.steps == 100);
  CHECK(loaded.tool_version == LATENTFACE_VERSION);
}

TEST_CASE("direction records reject malformed input") {
  CHECK_THROWS(DirectionRecord::deserialize("format = something-else\n"));
  std::string text = DirectionRecord{sample_direction()}.serialize();
  const auto pos = text.find("dim = 64");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 8, "dim = 63");
  CHECK_THROWS(DirectionRecord::deserialize(text));
  CHECK_THROWS(DirectionRecord::load("/nonexistent/direction.txt"));
}

TEST_CASE("loss traces round-trip exactly") {
  TempDir dir;
  std::vector<LossRecord> trace;
  GaussianStream g(2);
  for (int i = 0; i < 10; ++i) {
    trace.push_back({i, g.uniform(), g.uniform() * 1e-7, g.uniform() * 3, g.uniform()});
  }
  write_trace(trace, dir / "trace.jsonl");
  const auto back = read_trace(dir / "trace.jsonl");
  REQUIRE(back.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(back[i].step == trace[i].step);
    CHECK(back[i].l_clip == trace[i].l_clip);
    CHECK(back[i].l_id == trace[i].l_id);
    CHECK(back[i].l_l2 == trace[i].l_l2);
    CHECK(back[i].total == trace[i].total);
  }
  const std::string text = test::read_file(dir / "trace.jsonl");
  CHECK(text.rfind("{\"step\":0,\"l_clip\":", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
}

TEST_CASE("eval report on identical renders") {
  const AngleEmbedder emb;
  const RenderSet r = constant_renders({0.2, 0.5, 0.9});
  const PromptBatch batch{{"p"}, {"p"}};
  const EvalReport report = evaluate_renders(r, r, batch, emb, emb);
  CHECK(report.identity_similarity == 1.0);
  CHECK(report.semantic_before == report.semantic_after);
  CHECK(report.views == 3);
  CHECK(report.prompts == 1);
}

TEST_CASE("eval report equals hand-computed means") {
  const AngleEmbedder emb;
  const RenderSet original = constant_renders({0.2, 0.5});
  const RenderSet manipulated = constant_renders({0.6, 0.3});
  const PromptBatch batch{{"p", "q"}, {"p", "q"}};
  const EvalReport report = evaluate_renders(original, manipulated, batch, emb, emb);
  CHECK(report.identity_similarity == doctest::Approx((std::cos(0.4) + std::cos(0.2)) / 2.0).epsilon(1e-12));
  CHECK(report.semantic_before == doctest::Approx(1.0 - (std::cos(0.2) + std::cos(0.5)) / 2.0).epsilon(1e-12));
  CHECK(report.semantic_after == doctest::Approx(1.0 - (std::cos(0.6) + std::cos(0.3)) / 2.0).epsilon(1e-12));
  CHECK(report.prompts == 2);

  const std::string text = report.serialize();
  CHECK(text.find("automated proxy") != std::string::npos);
  CHECK(text.find("not human ratings") != std::string::npos);
}

TEST_CASE("eval report rejects empty or misaligned sets") {
  const AngleEmbedder emb;
  const PromptBatch batch{{"p"}, {"p"}};
  CHECK_THROWS_AS(evaluate_renders(RenderSet{}, RenderSet{}, batch, emb, emb), InvalidArgument);
  CHECK_THROWS_AS(evaluate_renders(constant_renders({0.1}), constant_renders({0.1, 0.2}), batch, emb, emb),
                  InvalidArgument);
}
