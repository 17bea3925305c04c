#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "jacobi_oracle.hpp"
#include "latentface/commands.hpp"
#include "latentface/kv.hpp"
#include "latentface/pca.hpp"
#include "latentface/records.hpp"
#include "support.hpp"

using namespace latentface;
using latentface::test::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path run_dir_of(const Outcome& o) {
  std::string line = o.out;
  while (!line.empty() && line.back() == '\n') {
    line.pop_back();
  }
  return line;
}

// A directory holding reference generator and embedder manifests.
struct Workspace {
  TempDir dir;
  fs::path backend;

  explicit Workspace(const std::string& activation = "linear") {
    const Outcome o = run({"init-reference", "--out", (dir / "ref").string(), "--activation", activation});
    REQUIRE(o.code == 0);
    backend = dir / "ref" / "generator.manifest";
  }

  std::vector<std::string> manipulate(const std::string& out, std::vector<std::string> extra = {}) const {
    std::vector<std::string> args = {"manipulate", "--backend", backend.string(), "--image-size", "32", "--steps", "8",
                                     "--out", (dir / out).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  }
};

} // namespace

TEST_CASE("flag defaults") {
  const cli::Invocation inv = cli::parse({"manipulate", "--prompt", "old"});
  REQUIRE(inv.exit_code == -1);
  CHECK(inv.command == Command::manipulate);
  CHECK(inv.config.steps == 100);
  CHECK(inv.config.learning_rate == 0.01);
  CHECK(inv.config.weights.lambda_id == 0.01);
  CHECK(inv.config.weights.lambda_l2 == 0.001);
  CHECK(inv.config.views == kDefaultYaws);
  CHECK(inv.config.prompts == std::vector<std::string>{"old"});
  CHECK(inv.config.resolved_alphas(Command::apply) == std::vector<double>{0, 1, 2, 3});

  const cli::Invocation pca = cli::parse({"pca"});
  CHECK(pca.config.samples == 10000);
  CHECK(pca.config.resolved_alphas(Command::pca) == std::vector<double>{10.0});
}

TEST_CASE("repeatable and list flags") {
  const cli::Invocation inv =
      cli::parse({"manipulate", "--prompt", "old", "--prompt", "bearded", "--views=-45,0,45,90", "--seed", "17"});
  CHECK(inv.config.prompts == std::vector<std::string>{"old", "bearded"});
  CHECK(inv.config.views == std::vector<double>{-45, 0, 45, 90});
  CHECK(inv.config.seed == 17u);
  const cli::Invocation apply = cli::parse({"apply", "--alpha", "0,0.5,-1"});
  CHECK(apply.config.alphas == std::vector<double>{0, 0.5, -1});
}

TEST_CASE("config file is overridden by flags") {
  TempDir dir;
  KeyValueDocument doc;
  doc.set("steps", 40);
  doc.set("lambda_id", 0.0);
  doc.set("prompt.0", std::string("from file"));
  doc.set("layer", std::string("mid"));
  doc.save(dir / "run.conf");
  const cli::Invocation inv = cli::parse({"manipulate", "--config", (dir / "run.conf").string(), "--steps", "7"});
  REQUIRE(inv.exit_code == -1);
  CHECK(inv.config.steps == 7);
  CHECK(inv.config.weights.lambda_id == 0.0);
  CHECK(inv.config.layer == "mid");
  CHECK(inv.config.prompts == std::vector<std::string>{"from file"});

  KeyValueDocument bad;
  bad.set("stepz", 3);
  bad.save(dir / "bad.conf");
  CHECK(cli::parse({"manipulate", "--config", (dir / "bad.conf").string()}).exit_code == kExitConfig);
}

TEST_CASE("usage errors exit 2, help exits 0") {
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"manipulate", "--steps", "many"}).code == kExitConfig);
  CHECK(run({"frobnicate"}).code == kExitConfig);
  const Outcome help = run({"manipulate", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--lambda-id") != std::string::npos);
}

TEST_CASE("manipulate writes every artifact") {
  Workspace ws;
  const Outcome o = run(ws.manipulate("out", {"--prompt", "smiling face"}));
  REQUIRE_MESSAGE(o.code == 0, o.err);
  const fs::path run = run_dir_of(o);
  CHECK(run.filename().string().rfind("run-", 0) == 0);
  CHECK(run.filename().string().find("-seed0") != std::string::npos);
  for (const char* name : {"original/mesh.obj", "manipulated/mesh.obj", "original/view0.png", "manipulated/view2.png",
                           "direction.txt", "trace.jsonl", "eval.txt", "run.manifest", "original/mesh.mtl",
                           "original/mesh.png"}) {
    CHECK_MESSAGE(fs::exists(run / name), name);
  }
  CHECK(read_trace(run / "trace.jsonl").size() == 8u);
  const KeyValueDocument manifest = KeyValueDocument::load(run / "run.manifest");
  CHECK(manifest.require("run.command") == "manipulate");
  CHECK(manifest.require("layer") == "dense");
  CHECK(manifest.require_int("steps") == 8);
  CHECK(manifest.contains("run.wall_seconds"));
  CHECK(test::read_file(run / "eval.txt").find("not human ratings") != std::string::npos);
}

TEST_CASE("manipulate with a target image") {
  Workspace ws;
  const Outcome first = run(ws.manipulate("a", {"--prompt", "old"}));
  REQUIRE(first.code == 0);
  const fs::path target = run_dir_of(first) / "manipulated" / "view1.png";
  const Outcome o = run(ws.manipulate("b", {"--target-image", target.string()}));
  REQUIRE_MESSAGE(o.code == 0, o.err);
  const DirectionRecord record = DirectionRecord::load(run_dir_of(o) / "direction.txt");
  CHECK(record.direction.provenance.image_digest.rfind("fnv1a:", 0) == 0);
}

TEST_CASE("invalid configurations exit 2 without artifacts") {
  Workspace ws;
  const fs::path out = ws.dir / "nothing";
  auto expect_config_error = [&](const std::vector<std::string>& args) {
    const Outcome o = run(args);
    CHECK(o.code == kExitConfig);
    CHECK(o.err.rfind("error: ", 0) == 0);
    CHECK_FALSE(fs::exists(out));
  };
  expect_config_error({"manipulate", "--backend", (ws.dir / "missing.manifest").string(), "--prompt", "x", "--out",
                       out.string()});
  expect_config_error({"manipulate", "--backend", ws.backend.string(), "--out", out.string()});
  expect_config_error({"manipulate", "--backend", ws.backend.string(), "--prompt", "x", "--target-image",
                       (ws.dir / "none.png").string(), "--out", out.string()});
  expect_config_error({"manipulate", "--backend", ws.backend.string(), "--prompt", "x", "--layer", "nope", "--out",
                       out.string()});
  expect_config_error({"manipulate", "--backend", ws.backend.string(), "--prompt", "x", "--lambda-l2", "-1", "--out",
                       out.string()});
  expect_config_error({"manipulate", "--backend", ws.backend.string(), "--prompt", "x", "--embedder",
                       (ws.dir / "none.manifest").string(), "--out", out.string()});
}

TEST_CASE("divergence exits 3") {
  Workspace ws;
  const Outcome o = run(ws.manipulate("div", {"--prompt", "x", "--lr", "1e300"}));
  CHECK(o.code == kExitNumerical);
  CHECK(o.err.find("not finite") != std::string::npos);
}

TEST_CASE("apply sweeps strengths and reproduces the original at alpha 0") {
  Workspace ws;
  const Outcome m = run(ws.manipulate("m", {"--prompt", "smiling face"}));
  REQUIRE(m.code == 0);
  const fs::path mrun = run_dir_of(m);
  const Outcome a = run({"apply", "--backend", ws.backend.string(), "--direction", (mrun / "direction.txt").string(),
                         "--image-size", "32", "--out", (ws.dir / "apply").string()});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  const fs::path arun = run_dir_of(a);
  for (const char* name : {"alpha_0", "alpha_1", "alpha_2", "alpha_3"}) {
    CHECK(fs::exists(arun / name / "mesh.obj"));
  }
  CHECK(test::read_file(arun / "alpha_0" / "mesh.obj") == test::read_file(mrun / "original" / "mesh.obj"));
  CHECK(test::read_file(arun / "alpha_0" / "mesh.png") == test::read_file(mrun / "original" / "mesh.png"));
  CHECK(test::read_file(arun / "alpha_1" / "mesh.obj") == test::read_file(mrun / "manipulated" / "mesh.obj"));

  // Recorded codes are exactly c + alpha * delta.
  const KeyValueDocument codes = KeyValueDocument::load(arun / "codes.txt");
  const Direction dir = DirectionRecord::load(mrun / "direction.txt").direction;
  const auto base = split(codes.require("base"), ' ');
  for (int i = 0; i < 4; ++i) {
    const double alpha = codes.require_double("alpha." + std::to_string(i));
    CHECK(alpha == static_cast<double>(i));
    const auto code = split(codes.require("code." + std::to_string(i)), ' ');
    REQUIRE(code.size() == static_cast<std::size_t>(dir.dim()));
    for (int k = 0; k < dir.dim(); ++k) {
      CHECK(parse_double(code[k]) == parse_double(base[k]) + alpha * dir.delta[k]);
    }
  }
}

TEST_CASE("apply rejects a tap-layer mismatch") {
  Workspace ws;
  const Outcome m = run(ws.manipulate("m", {"--prompt", "x", "--layer", "mid"}));
  REQUIRE(m.code == 0);
  const std::string direction = (run_dir_of(m) / "direction.txt").string();
  const Outcome a = run({"apply", "--backend", ws.backend.string(), "--direction", direction, "--layer", "dense",
                         "--out", (ws.dir / "x").string()});
  CHECK(a.code == kExitConfig);
  CHECK_FALSE(fs::exists(ws.dir / "x"));

  // A backend whose tap has a different width rejects the direction too.
  ReferenceGeneratorConfig narrow;
  narrow.layers = {{"dense", 32}, {"mid", 48}};
  init_reference(narrow, ws.dir / "narrow");
  const Outcome b = run({"apply", "--backend", (ws.dir / "narrow" / "generator.manifest").string(), "--direction",
                         direction, "--layer", "mid", "--out", (ws.dir / "y").string()});
  CHECK(b.code == 0);
  const std::string dense_dir = (run_dir_of(run(ws.manipulate("d", {"--prompt", "x"}))) / "direction.txt").string();
  const Outcome c = run({"apply", "--backend", (ws.dir / "narrow" / "generator.manifest").string(), "--direction",
                         dense_dir, "--out", (ws.dir / "z").string()});
  CHECK(c.code == kExitConfig);
  CHECK_FALSE(fs::exists(ws.dir / "z"));
}

TEST_CASE("pca persists components that match the eigendecomposition") {
  Workspace ws("tanh");
  const Outcome o = run({"pca", "--backend", ws.backend.string(), "--samples", "500", "--components", "5",
                         "--image-size", "32", "--out", (ws.dir / "pca").string(), "--seed", "3"});
  REQUIRE_MESSAGE(o.code == 0, o.err);
  const fs::path run = run_dir_of(o);
  for (int i = 0; i < 5; ++i) {
    CHECK(fs::exists(run / ("pc_" + std::to_string(i) + ".txt")));
  }
  CHECK_FALSE(fs::exists(run / "pc_5.txt"));
  CHECK(fs::exists(run / "pc_0" / "plus" / "mesh.obj"));
  CHECK(fs::exists(run / "pc_4" / "minus" / "view2.png"));

  const PrincipalComponentSet pcs = load_components(run);
  const auto generator = load_generator(ws.backend);
  const test::EigenOracle oracle = test::covariance_eigen(collect_samples(*generator, 500, "dense", 3).rows);
  for (int i = 0; i < 5; ++i) {
    CHECK(test::abs_cosine(pcs.components.row(i).transpose(), oracle.vectors[i]) > 0.999);
    const Direction d = DirectionRecord::load(run / ("pc_" + std::to_string(i) + ".txt")).direction;
    CHECK(d.delta == pcs.components.row(i).transpose());
  }
}

TEST_CASE("eval scores render files") {
  Workspace ws;
  const Outcome m = run(ws.manipulate("m", {"--prompt", "smiling face"}));
  REQUIRE(m.code == 0);
  const fs::path mrun = run_dir_of(m);
  std::vector<std::string> args = {"eval", "--prompt", "smiling face", "--out", (ws.dir / "eval").string()};
  for (int v = 0; v < 3; ++v) {
    args.insert(args.end(), {"--original", (mrun / "original" / ("view" + std::to_string(v) + ".png")).string()});
    args.insert(args.end(), {"--manipulated", (mrun / "original" / ("view" + std::to_string(v) + ".png")).string()});
  }
  const Outcome same = run(args);
  REQUIRE_MESSAGE(same.code == 0, same.err);
  const KeyValueDocument report = KeyValueDocument::load(run_dir_of(same) / "eval.txt");
  CHECK(report.require_double("identity_similarity") == 1.0);
  CHECK(report.require_double("semantic_distance_before") == report.require_double("semantic_distance_after"));
  CHECK(report.require_int("views") == 3);

  CHECK(run({"eval", "--prompt", "x", "--out", (ws.dir / "e2").string()}).code == kExitConfig);
  CHECK(run({"eval", "--prompt", "x", "--original", (mrun / "original" / "view0.png").string(), "--out",
             (ws.dir / "e2").string()})
            .code == kExitConfig);
  CHECK_FALSE(fs::exists(ws.dir / "e2"));
}

TEST_CASE("replaying a run manifest reproduces meshes and traces") {
  Workspace ws;
  const Outcome first = run(ws.manipulate("first", {"--prompt", "old", "--seed", "12", "--lambda-id", "0"}));
  REQUIRE(first.code == 0);
  const fs::path a = run_dir_of(first);
  const Outcome again = run({"manipulate", "--config", (a / "run.manifest").string()});
  REQUIRE_MESSAGE(again.code == 0, again.err);
  const fs::path b = run_dir_of(again);
  CHECK(a != b);
  CHECK(a.parent_path() == b.parent_path());
  for (const char* name : {"original/mesh.obj", "manipulated/mesh.obj", "trace.jsonl", "direction.txt"}) {
    CHECK_MESSAGE(test::read_file(a / name) == test::read_file(b / name), name);
  }
  const KeyValueDocument manifest = KeyValueDocument::load(b / "run.manifest");
  CHECK(manifest.require_double("lambda_id") == 0.0);
  CHECK(manifest.require("seed") == "12");
}

TEST_CASE("init-reference writes loadable manifests") {
  TempDir dir;
  const Outcome o = run({"init-reference", "--out", (dir / "r").string(), "--latent-dim", "16"});
  REQUIRE(o.code == 0);
  const auto gen = load_generator(dir / "r" / "generator.manifest");
  CHECK(gen->latent_dim() == 16);
  CHECK(load_joint_embedder(dir / "r" / "joint.manifest")->dim() == builtin_joint_manifest().dim);
  CHECK(load_identity_embedder(dir / "r" / "identity.manifest")->dim() == builtin_identity_manifest().dim);
}
