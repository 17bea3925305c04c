#include "latentface/pca.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <sstream>

#include "latentface/error.hpp"
#include "latentface/kv.hpp"

namespace latentface {

LatentSampleMatrix collect_samples(
    const GeneratorBackend& generator,
    int n,
    const std::string& tap,
    std::uint64_t seed,
    double sigma,
    Execution exec) {
  require(n >= 2, "collect_samples: need at least 2 samples");
  const int width = generator.layer_width(tap);
  const int d = generator.latent_dim();
  LatentSampleMatrix out;
  out.rows.resize(n, width);
  out.tap_layer = tap;
  out.seed = seed;
  const ExpressionVector neutral = ExpressionVector::neutral();
  auto fill_row = [&](int i) {
    const LatentCode z = sample_latent(seed + static_cast<std::uint64_t>(i), d, sigma);
    out.rows.row(i) = generator.partial_forward(z, neutral, tap).values.transpose();
  };
  if (exec == Execution::serial) {
    for (int i = 0; i < n; ++i) {
      fill_row(i);
    }
  } else {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      fill_row(i);
    }
  }
  return out;
}

PrincipalComponentSet fit_pca(const LatentSampleMatrix& samples, int k) {
  const auto n = samples.rows.rows();
  const auto width = samples.rows.cols();
  require(n >= 2, "fit_pca: need at least 2 samples");
  require<InvalidData>(samples.rows.allFinite(), "fit_pca: sample matrix has non-finite entries");
  require(k >= 1 && k <= std::min<Eigen::Index>(n - 1, width),
          "fit_pca: k must lie in [1, min(n-1, width)] = [1, " + std::to_string(std::min<Eigen::Index>(n - 1, width)) +
              "]");

  PrincipalComponentSet pcs;
  pcs.mean = samples.rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rows.rowwise() - pcs.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& singular = svd.singularValues();

  pcs.components.resize(k, width);
  pcs.explained_variance.resize(k);
  pcs.rank_deficient.assign(k, false);
  const double tolerance = std::max<double>(n, width) * std::numeric_limits<double>::epsilon() * singular[0];
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd axis = svd.matrixV().col(i);
    Eigen::Index largest = 0;
    axis.cwiseAbs().maxCoeff(&largest);
    if (axis[largest] < 0.0) {
      axis = -axis;
    }
    pcs.components.row(i) = axis.transpose();
    pcs.explained_variance[i] = singular[i] * singular[i] / static_cast<double>(n - 1);
    pcs.rank_deficient[i] = singular[i] <= tolerance;
  }
  pcs.tap_layer = samples.tap_layer;
  pcs.samples = static_cast<int>(n);
  pcs.seed = samples.seed;
  return pcs;
}

IntermediateCode apply_component(
    const IntermediateCode& c,
    const PrincipalComponentSet& pcs,
    int index,
    double alpha,
    int n_steps) {
  require(index >= 0 && index < pcs.count(),
          "apply_component: index " + std::to_string(index) + " outside [0, " + std::to_string(pcs.count()) + ")");
  require(c.dim() == pcs.components.cols(), "apply_component: code width does not match components");
  require(pcs.tap_layer.empty() || c.tap_layer == pcs.tap_layer,
          "apply_component: components were fit on layer '" + pcs.tap_layer + "'");
  IntermediateCode out;
  out.tap_layer = c.tap_layer;
  out.values = c.values + (alpha * n_steps) * pcs.components.row(index).transpose();
  return out;
}

namespace {

std::string join_row(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) {
      out += ' ';
    }
    out += format_double(v[i]);
  }
  return out;
}

Eigen::VectorXd parse_row(const std::string& line, Eigen::Index expected) {
  std::istringstream in(line);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    values.push_back(parse_double(token));
  }
  require<InvalidData>(static_cast<Eigen::Index>(values.size()) == expected, "component matrix row has wrong width");
  return Eigen::Map<Eigen::VectorXd>(values.data(), expected);
}

} // namespace

void save_components(const PrincipalComponentSet& pcs, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  KeyValueDocument meta;
  meta.set("tap_layer", pcs.tap_layer);
  meta.set("samples", pcs.samples);
  meta.set("seed", static_cast<long long>(pcs.seed));
  meta.set("components", pcs.count());
  meta.set("width", static_cast<int>(pcs.components.cols()));
  meta.set("explained_variance", join_row(pcs.explained_variance));
  std::string flags;
  for (bool flag : pcs.rank_deficient) {
    flags += flags.empty() ? "" : " ";
    flags += flag ? "1" : "0";
  }
  meta.set("rank_deficient", flags);
  meta.save(dir / (stem + ".meta"));

  std::ofstream out(dir / (stem + ".matrix"), std::ios::binary);
  require<IoError>(static_cast<bool>(out), "cannot write component matrix in " + dir.string());
  out << join_row(pcs.mean) << '\n';
  for (int i = 0; i < pcs.count(); ++i) {
    out << join_row(pcs.components.row(i).transpose()) << '\n';
  }
  require<IoError>(static_cast<bool>(out), "write failed for component matrix in " + dir.string());
}

PrincipalComponentSet load_components(const std::filesystem::path& dir, const std::string& stem) {
  const auto meta = KeyValueDocument::load(dir / (stem + ".meta"));
  PrincipalComponentSet pcs;
  pcs.tap_layer = meta.require("tap_layer");
  pcs.samples = static_cast<int>(meta.require_int("samples"));
  pcs.seed = static_cast<std::uint64_t>(meta.require_int("seed"));
  const auto k = meta.require_int("components");
  const auto width = meta.require_int("width");
  pcs.explained_variance = parse_row(meta.require("explained_variance"), k);
  for (const auto& token : split(meta.get("rank_deficient").value_or(""), ' ')) {
    if (!token.empty()) {
      pcs.rank_deficient.push_back(token == "1");
    }
  }
  pcs.rank_deficient.resize(k, false);

  std::ifstream in(dir / (stem + ".matrix"));
  require<IoError>(static_cast<bool>(in), "cannot open component matrix in " + dir.string());
  std::string line;
  require<InvalidData>(static_cast<bool>(std::getline(in, line)), "component matrix is empty");
  pcs.mean = parse_row(line, width);
  pcs.components.resize(k, width);
  for (long long i = 0; i < k; ++i) {
    require<InvalidData>(static_cast<bool>(std::getline(in, line)), "component matrix is truncated");
    pcs.components.row(i) = parse_row(line, width).transpose();
  }
  return pcs;
}

} // namespace latentface
