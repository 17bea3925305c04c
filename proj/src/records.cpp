#include "latentface/records.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "latentface/error.hpp"
#include "latentface/kv.hpp"
#include "latentface/losses.hpp"

namespace latentface {

std::string DirectionRecord::serialize() const {
  const auto& dir = direction;
  const auto& prov = dir.provenance;
  KeyValueDocument doc;
  doc.set("format", std::string("latentface-direction-1"));
  doc.set("tool_version", tool_version);
  doc.set("tap_layer", dir.tap_layer);
  doc.set("dim", dir.dim());
  std::string values;
  for (Eigen::Index i = 0; i < dir.delta.size(); ++i) {
    values += i ? " " : "";
    values += format_double(dir.delta[i]);
  }
  doc.set("delta", values);
  doc.set("prompt", prov.prompt);
  doc.set("image_digest", prov.image_digest);
  doc.set("lambda_id", prov.lambda_id);
  doc.set("lambda_l2", prov.lambda_l2);
  doc.set("steps", prov.steps);
  doc.set("learning_rate", prov.learning_rate);
  doc.set("final_clip", prov.final_clip);
  doc.set("final_id", prov.final_id);
  doc.set("final_l2", prov.final_l2);
  doc.set("final_total", prov.final_total);
  return doc.to_string();
}

DirectionRecord DirectionRecord::deserialize(const std::string& text) {
  const auto doc = KeyValueDocument::parse(text);
  require<InvalidData>(doc.get("format").value_or("") == "latentface-direction-1", "not a direction record");
  DirectionRecord record;
  record.tool_version = doc.require("tool_version");
  auto& dir = record.direction;
  dir.tap_layer = doc.require("tap_layer");
  const auto dim = doc.require_int("dim");
  std::istringstream values(doc.require("delta"));
  std::vector<double> delta;
  std::string token;
  while (values >> token) {
    delta.push_back(parse_double(token));
  }
  require<InvalidData>(static_cast<long long>(delta.size()) == dim, "direction record: delta length != dim");
  dir.delta = Eigen::Map<Eigen::VectorXd>(delta.data(), static_cast<Eigen::Index>(delta.size()));
  require<InvalidData>(dir.delta.allFinite(), "direction record: delta is not finite");
  auto& prov = dir.provenance;
  prov.prompt = doc.get("prompt").value_or("");
  prov.image_digest = doc.get("image_digest").value_or("");
  prov.lambda_id = doc.get_double("lambda_id", 0.0);
  prov.lambda_l2 = doc.get_double("lambda_l2", 0.0);
  prov.steps = static_cast<int>(doc.get_int("steps", 0));
  prov.learning_rate = doc.get_double("learning_rate", 0.0);
  prov.final_clip = doc.get_double("final_clip", 0.0);
  prov.final_id = doc.get_double("final_id", 0.0);
  prov.final_l2 = doc.get_double("final_l2", 0.0);
  prov.final_total = doc.get_double("final_total", 0.0);
  return record;
}

void DirectionRecord::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  require<IoError>(static_cast<bool>(out), "cannot write " + path.string());
  out << serialize();
  require<IoError>(static_cast<bool>(out), "write failed for " + path.string());
}

DirectionRecord DirectionRecord::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require<IoError>(static_cast<bool>(in), "cannot open direction file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

void write_trace(const std::vector<LossRecord>& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require<IoError>(static_cast<bool>(out), "cannot write " + path.string());
  for (const auto& r : trace) {
    nlohmann::ordered_json line;
    line["step"] = r.step;
    line["l_clip"] = r.l_clip;
    line["l_id"] = r.l_id;
    line["l_l2"] = r.l_l2;
    line["total"] = r.total;
    out << line.dump() << '\n';
  }
  require<IoError>(static_cast<bool>(out), "write failed for " + path.string());
}

std::vector<LossRecord> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  require<IoError>(static_cast<bool>(in), "cannot open " + path.string());
  std::vector<LossRecord> trace;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      continue;
    }
    const auto j = nlohmann::json::parse(line);
    trace.push_back({j.at("step").get<int>(), j.at("l_clip").get<double>(), j.at("l_id").get<double>(),
                     j.at("l_l2").get<double>(), j.at("total").get<double>()});
  }
  return trace;
}

std::string EvalReport::serialize() const {
  KeyValueDocument doc;
  doc.set("kind", std::string("automated proxy scores (not human ratings)"));
  doc.set("views", views);
  doc.set("prompts", prompts);
  doc.set("identity_similarity", identity_similarity);
  doc.set("semantic_distance_before", semantic_before);
  doc.set("semantic_distance_after", semantic_after);
  return doc.to_string();
}

void EvalReport::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  require<IoError>(static_cast<bool>(out), "cannot write " + path.string());
  out << serialize();
}

EvalReport evaluate_renders(
    const RenderSet& original,
    const RenderSet& manipulated,
    const ClipTarget& target,
    const JointEmbedder& embedder,
    const IdentityEmbedder& identity_embedder) {
  require(!original.images.empty(), "evaluation needs at least one render");
  require(original.size() == manipulated.size(), "original and manipulated render sets are not aligned");
  EvalReport report;
  report.views = static_cast<int>(original.size());
  report.prompts = static_cast<int>(target.embeddings().size());
  report.identity_similarity = 1.0 - identity_loss(original, manipulated, identity_embedder);
  report.semantic_before = target.evaluate(original, embedder, false).value;
  report.semantic_after = target.evaluate(manipulated, embedder, false).value;
  return report;
}

EvalReport evaluate_renders(
    const RenderSet& original,
    const RenderSet& manipulated,
    const PromptBatch& batch,
    const JointEmbedder& embedder,
    const IdentityEmbedder& identity_embedder) {
  require(!original.images.empty(), "evaluation needs at least one render");
  return evaluate_renders(original, manipulated, ClipTarget::from_prompts(batch, embedder), embedder,
                          identity_embedder);
}

} // namespace latentface
