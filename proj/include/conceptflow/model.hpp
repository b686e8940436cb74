#pragma once

// All trainable weights, their deterministic initialization, the Adam
// optimizer, and binary checkpointing.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "conceptflow/nn.hpp"
#include "conceptflow/transe.hpp"

namespace conceptflow {

struct ModelDims {
  int word_count = 0;
  int concept_count = 0;
  int relation_count = 0;
  int word_dim = 32;
  int concept_dim = 32;
  int hidden = 32;
  int gnn_layers = 2;
};

class ModelParams {
 public:
  ModelDims dims;

  Tensor word_emb;      // (|W|, word_dim)
  Tensor concept_emb;   // (|C|, concept_dim)
  Tensor relation_emb;  // (|R|, concept_dim)

  GruCell encoder_cell;  // input word_dim
  GruCell decoder_cell;  // input hidden + word_dim

  // Central graph network.
  Ffn utter_update;  // hidden -> hidden
  Ffn message_ffn;   // concept_dim + hidden -> hidden
  Ffn node_update;   // 3*hidden -> hidden

  // Outer flow attention over (head, relation, tail).
  Tensor attn_rel, attn_head, attn_tail;  // (concept_dim, concept_dim)

  Ffn context_ffn;  // 2*hidden + 2*concept_dim -> hidden
  Ffn gate_ffn;     // hidden -> 3, identity

  // Bridging projections, instantiated only when the spaces they connect
  // have different dimensions. An undefined tensor means "use the vector
  // as-is".
  Tensor concept_in_proj;     // (hidden, concept_dim): layer-0 concept vectors
  Tensor state_rel_proj;      // (concept_dim, hidden): p before the relation dot
  Tensor state_word_proj;     // (word_dim, hidden): s before word emission
  Tensor state_concept_proj;  // (concept_dim, hidden): s before outer emission/selection
  Tensor state_flow_proj;     // (2*concept_dim, hidden): s before the flow attention
  Tensor concept_word_proj;   // (word_dim, concept_dim): concept fed back as y

  const std::vector<std::pair<std::string, Tensor>>& registry() const { return registry_; }

  void zero_grad() {
    for (auto& [name, t] : registry_) t.zero_grad();
  }

  void register_param(const std::string& name, Tensor& t) {
    registry_.emplace_back(name, t);
  }

  void register_gru(const std::string& prefix, GruCell& cell) {
    register_param(prefix + ".w_update", cell.w_update);
    register_param(prefix + ".b_update", cell.b_update);
    register_param(prefix + ".w_reset", cell.w_reset);
    register_param(prefix + ".b_reset", cell.b_reset);
    register_param(prefix + ".w_cand", cell.w_cand);
    register_param(prefix + ".b_cand", cell.b_cand);
  }

  void register_ffn(const std::string& prefix, Ffn& f) {
    register_param(prefix + ".weight", f.weight);
    register_param(prefix + ".bias", f.bias);
  }

 private:
  std::vector<std::pair<std::string, Tensor>> registry_;
};

struct InitOptions {
  double scale = 0.1;        // uniform bound for weight matrices
  double word_scale = 0.1;   // uniform bound for word embeddings
  const TranseResult* pretrained = nullptr;  // concept/relation init, optional
};

inline ModelParams init_model(const ModelDims& dims, uint64_t seed,
                              const InitOptions& opts = {}) {
  if (dims.word_dim < 1 || dims.concept_dim < 1 || dims.hidden < 1 || dims.gnn_layers < 1)
    throw UsageError("model dimensions must be >= 1");
  if (dims.word_count < 1) throw DataError("model needs a word vocabulary");

  RandomSource rng(seed);
  ModelParams p;
  p.dims = dims;

  p.word_emb = random_tensor({dims.word_count, dims.word_dim}, opts.word_scale, rng);
  if (opts.pretrained != nullptr) {
    const TranseResult& pre = *opts.pretrained;
    if (static_cast<int>(pre.concept_vecs.size()) != dims.concept_count ||
        static_cast<int>(pre.relation_vecs.size()) != dims.relation_count)
      throw DataError("pretrained embedding count does not match the graph");
    Vec cdata, rdata;
    for (const Vec& v : pre.concept_vecs) {
      if (static_cast<int>(v.size()) != dims.concept_dim)
        throw DataError("pretrained embedding dimension mismatch");
      cdata.insert(cdata.end(), v.begin(), v.end());
    }
    for (const Vec& v : pre.relation_vecs) rdata.insert(rdata.end(), v.begin(), v.end());
    p.concept_emb = Tensor({dims.concept_count, dims.concept_dim}, std::move(cdata), true);
    p.relation_emb = Tensor({dims.relation_count, dims.concept_dim}, std::move(rdata), true);
  } else {
    p.concept_emb = random_tensor({dims.concept_count, dims.concept_dim}, opts.scale, rng);
    p.relation_emb = random_tensor({dims.relation_count, dims.concept_dim}, opts.scale, rng);
  }

  p.encoder_cell = make_gru(dims.hidden, dims.word_dim, opts.scale, rng);
  p.decoder_cell = make_gru(dims.hidden, dims.hidden + dims.word_dim, opts.scale, rng);

  p.utter_update = make_ffn(dims.hidden, dims.hidden, Ffn::Activation::tanh, opts.scale, rng);
  p.message_ffn = make_ffn(dims.hidden, dims.concept_dim + dims.hidden,
                           Ffn::Activation::tanh, opts.scale, rng);
  p.node_update = make_ffn(dims.hidden, 3 * dims.hidden, Ffn::Activation::tanh, opts.scale, rng);

  p.attn_rel = random_tensor({dims.concept_dim, dims.concept_dim}, opts.scale, rng);
  p.attn_head = random_tensor({dims.concept_dim, dims.concept_dim}, opts.scale, rng);
  p.attn_tail = random_tensor({dims.concept_dim, dims.concept_dim}, opts.scale, rng);

  p.context_ffn = make_ffn(dims.hidden, 2 * dims.hidden + 2 * dims.concept_dim,
                           Ffn::Activation::tanh, opts.scale, rng);
  p.gate_ffn = make_ffn(3, dims.hidden, Ffn::Activation::identity, opts.scale, rng);

  if (dims.concept_dim != dims.hidden) {
    p.concept_in_proj = random_tensor({dims.hidden, dims.concept_dim}, opts.scale, rng);
    p.state_rel_proj = random_tensor({dims.concept_dim, dims.hidden}, opts.scale, rng);
    p.state_concept_proj = random_tensor({dims.concept_dim, dims.hidden}, opts.scale, rng);
  }
  if (dims.word_dim != dims.hidden)
    p.state_word_proj = random_tensor({dims.word_dim, dims.hidden}, opts.scale, rng);
  if (2 * dims.concept_dim != dims.hidden)
    p.state_flow_proj = random_tensor({2 * dims.concept_dim, dims.hidden}, opts.scale, rng);
  if (dims.concept_dim != dims.word_dim)
    p.concept_word_proj = random_tensor({dims.word_dim, dims.concept_dim}, opts.scale, rng);

  p.register_param("word_emb", p.word_emb);
  p.register_param("concept_emb", p.concept_emb);
  p.register_param("relation_emb", p.relation_emb);
  p.register_gru("encoder", p.encoder_cell);
  p.register_gru("decoder", p.decoder_cell);
  p.register_ffn("utter_update", p.utter_update);
  p.register_ffn("message_ffn", p.message_ffn);
  p.register_ffn("node_update", p.node_update);
  p.register_param("attn_rel", p.attn_rel);
  p.register_param("attn_head", p.attn_head);
  p.register_param("attn_tail", p.attn_tail);
  p.register_ffn("context_ffn", p.context_ffn);
  p.register_ffn("gate_ffn", p.gate_ffn);
  if (p.concept_in_proj.defined()) p.register_param("concept_in_proj", p.concept_in_proj);
  if (p.state_rel_proj.defined()) p.register_param("state_rel_proj", p.state_rel_proj);
  if (p.state_word_proj.defined()) p.register_param("state_word_proj", p.state_word_proj);
  if (p.state_concept_proj.defined())
    p.register_param("state_concept_proj", p.state_concept_proj);
  if (p.state_flow_proj.defined()) p.register_param("state_flow_proj", p.state_flow_proj);
  if (p.concept_word_proj.defined()) p.register_param("concept_word_proj", p.concept_word_proj);
  return p;
}

// Project `x` with `proj` when it is defined, otherwise pass it through.
inline Tensor maybe_project(Tape* tape, const Tensor& proj, const Tensor& x) {
  return proj.defined() ? matvec(tape, proj, x) : x;
}

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ModelParams& params) {
    const auto& registry = params.registry();
    if (m_.empty()) {
      m_.resize(registry.size());
      v_.resize(registry.size());
      for (size_t i = 0; i < registry.size(); ++i) {
        size_t n = registry[i].second.values().size();
        m_[i].assign(n, 0.0);
        v_[i].assign(n, 0.0);
      }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < registry.size(); ++i) {
      Tensor t = registry[i].second;
      const Vec& g = t.grad();
      Vec& x = t.mutable_values();
      for (size_t j = 0; j < x.size(); ++j) {
        m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
        v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
        double mhat = m_[i][j] / bc1;
        double vhat = v_[i][j] / bc2;
        x[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  long step_count() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Vec> m_, v_;
};

// ---------------------------------------------------------------------------
// Checkpointing: raw little-endian doubles plus a fingerprint of the model
// dimensions. load(save(p)) reproduces forward outputs bitwise.

inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t dims_fingerprint(const ModelDims& d) {
  std::string key = std::to_string(d.word_count) + "," + std::to_string(d.concept_count) +
                    "," + std::to_string(d.relation_count) + "," + std::to_string(d.word_dim) +
                    "," + std::to_string(d.concept_dim) + "," + std::to_string(d.hidden) + "," +
                    std::to_string(d.gnn_layers);
  return fnv1a(key);
}

namespace detail {

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint: truncated file");
  return v;
}

}  // namespace detail

constexpr uint32_t kCheckpointMagic = 0x43464b31;  // "CFK1"

inline void save_checkpoint(const std::string& path, const ModelParams& params,
                            uint64_t step) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  detail::write_raw(out, kCheckpointMagic);
  detail::write_raw(out, dims_fingerprint(params.dims));
  detail::write_raw(out, step);
  detail::write_raw(out, static_cast<uint32_t>(params.registry().size()));
  for (const auto& [name, tensor] : params.registry()) {
    detail::write_raw(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_raw(out, static_cast<uint32_t>(tensor.values().size()));
    out.write(reinterpret_cast<const char*>(tensor.values().data()),
              static_cast<std::streamsize>(tensor.values().size() * sizeof(double)));
  }
}

// Loads values into an already-constructed model. The stored fingerprint and
// every parameter name/size must match.
inline uint64_t load_checkpoint(const std::string& path, ModelParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  if (detail::read_raw<uint32_t>(in) != kCheckpointMagic)
    throw DataError("not a checkpoint file: " + path);
  uint64_t fingerprint = detail::read_raw<uint64_t>(in);
  if (fingerprint != dims_fingerprint(params.dims))
    throw DataError("checkpoint fingerprint does not match the configured dimensions");
  uint64_t step = detail::read_raw<uint64_t>(in);
  uint32_t count = detail::read_raw<uint32_t>(in);
  if (count != params.registry().size())
    throw DataError("checkpoint parameter count mismatch");
  for (const auto& [name, tensor] : params.registry()) {
    uint32_t name_len = detail::read_raw<uint32_t>(in);
    std::string stored(name_len, '\0');
    in.read(stored.data(), name_len);
    if (stored != name) throw DataError("checkpoint parameter order mismatch at " + name);
    uint32_t n = detail::read_raw<uint32_t>(in);
    Tensor t = tensor;
    if (n != t.values().size()) throw DataError("checkpoint size mismatch at " + name);
    in.read(reinterpret_cast<char*>(t.mutable_values().data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw DataError("checkpoint: truncated file");
  }
  return step;
}

}  // namespace conceptflow
