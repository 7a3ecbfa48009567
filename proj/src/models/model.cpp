#include "eegart/models/model.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "eegart/util/errors.hpp"

namespace eegart::models {

namespace {

struct KindName {
  ModelKind kind;
  const char* name;
};
constexpr KindName kKindNames[] = {{ModelKind::cnn, "cnn"},
                                   {ModelKind::cnn_lstm, "cnn_lstm"},
                                   {ModelKind::cnn_cbam, "cnn_cbam"},
                                   {ModelKind::cnn_cbam_lstm, "cnn_cbam_lstm"},
                                   {ModelKind::heuristic_1dcnn, "heuristic_1dcnn"}};

constexpr double kEpochSeconds = 20.0;

std::string conv_detail(std::size_t in, std::size_t out, std::size_t kernel,
                        const nn::Conv1dOptions& o) {
  std::ostringstream s;
  s << in << "->" << out << " k=" << kernel << " s=" << o.stride << " pad=" << o.pad_left << "/"
    << o.pad_right;
  if (o.pad_mode == nn::PadMode::circular) s << " circular";
  return s.str();
}

}  // namespace

std::string to_string(ModelKind k) {
  for (const auto& e : kKindNames)
    if (e.kind == k) return e.name;
  throw std::invalid_argument("invalid model kind");
}

ModelKind model_kind_from_string(std::string_view s) {
  for (const auto& e : kKindNames)
    if (s == e.name) return e.kind;
  throw std::invalid_argument("unknown model kind: " + std::string(s));
}

bool has_cbam(ModelKind k) { return k == ModelKind::cnn_cbam || k == ModelKind::cnn_cbam_lstm; }
bool has_lstm(ModelKind k) { return k == ModelKind::cnn_lstm || k == ModelKind::cnn_cbam_lstm; }

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds{ModelKind::cnn, ModelKind::cnn_lstm,
                                            ModelKind::cnn_cbam, ModelKind::cnn_cbam_lstm,
                                            ModelKind::heuristic_1dcnn};
  return kinds;
}

std::string to_string(Profile p) { return p == Profile::toy ? "toy" : "full"; }

Profile profile_from_string(std::string_view s) {
  if (s == "toy") return Profile::toy;
  if (s == "full") return Profile::full;
  throw std::invalid_argument("unknown model profile: " + std::string(s));
}

Widths widths(Profile p) {
  const Widths full{64, 128, 128, 32};
  if (p == Profile::full) return full;
  return {full.first_filters / 4, full.filters / 4, full.lstm_hidden / 4,
          full.heuristic_filters / 4};
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model_kind"] = models::to_string(kind);
  j["profile"] = models::to_string(profile);
  j["rng_seed"] = seed;
  j["dropout"] = dropout;
  j["cbam_ratio"] = cbam_ratio;
  j["circular_padding"] = circular_padding;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.kind = model_kind_from_string(j.at("model_kind").get<std::string>());
  c.profile = profile_from_string(j.at("profile").get<std::string>());
  c.seed = j.at("rng_seed").get<std::uint64_t>();
  c.dropout = j.value("dropout", 0.5);
  c.cbam_ratio = j.value("cbam_ratio", std::size_t{8});
  c.circular_padding = j.value("circular_padding", false);
  return c;
}

nlohmann::ordered_json layer_table_json(const std::vector<LayerRow>& rows) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["op"] = r.op;
    j["detail"] = r.detail;
    j["out_shape"] = r.out_shape;
    j["params"] = r.params;
    out.push_back(std::move(j));
  }
  return out;
}

std::string layer_table_markdown(const std::vector<LayerRow>& rows) {
  std::ostringstream s;
  s << "| layer | op | detail | output | params |\n|---|---|---|---|---|\n";
  std::size_t total = 0;
  for (const auto& r : rows) {
    s << "| " << r.name << " | " << r.op << " | " << r.detail << " | " << nn::shape_str(r.out_shape)
      << " | " << r.params << " |\n";
    total += r.params;
  }
  s << "| total | | | | " << total << " |\n";
  return s.str();
}

template <typename T>
Model<T>::Model(ModelConfig cfg) : cfg_(cfg) {
  if (!(cfg_.dropout >= 0.0 && cfg_.dropout < 1.0)) {
    throw std::invalid_argument("model: dropout must be in [0, 1)");
  }
  if (cfg_.kind == ModelKind::heuristic_1dcnn) {
    build_heuristic();
  } else {
    build_two_branch();
  }
}

template <typename T>
void Model<T>::build_two_branch() {
  const Widths w = widths(cfg_.profile);
  const bool lstm = has_lstm(cfg_.kind);
  const bool cbam = has_cbam(cfg_.kind);
  const std::size_t n_conv = lstm ? 4 : 5;
  const std::uint64_t seed = cfg_.seed;

  auto add_branch = [&](const std::string& branch, std::vector<ConvBlock>& blocks,
                        std::size_t k1, nn::Conv1dOptions o1, std::size_t pool1, std::size_t k,
                        nn::Conv1dOptions o, std::size_t last_pool, bool with_cbam) {
    std::size_t len = kInputLength, in = 1;
    for (std::size_t i = 0; i < n_conv; ++i) {
      const std::string base = branch + ".b" + std::to_string(i + 1);
      const bool first = i == 0, last = i + 1 == n_conv;
      const std::size_t out = first ? w.first_filters : w.filters;
      const std::size_t kernel = first ? k1 : k;
      const nn::Conv1dOptions opt = first ? o1 : o;
      ConvBlock b;
      std::size_t before = store_.parameter_count();
      b.conv = nn::Conv1dLayer<T>::create(store_, base + ".conv", in, out, kernel, opt, seed);
      len = nn::conv1d_output_length(len, kernel, opt);
      table_.push_back({base + ".conv", "conv1d", conv_detail(in, out, kernel, opt), {out, len},
                        store_.parameter_count() - before});
      before = store_.parameter_count();
      b.bn = nn::BatchNormLayer<T>::create(store_, base + ".bn", out);
      table_.push_back({base + ".bn", "batchnorm+relu", "", {out, len},
                        store_.parameter_count() - before});
      if (with_cbam) {
        before = store_.parameter_count();
        b.cbam = attention::Cbam<T>::create(store_, base + ".cbam", out, cfg_.cbam_ratio, seed);
        table_.push_back({base + ".cbam", "cbam", "ratio=" + std::to_string(cfg_.cbam_ratio),
                          {out, len}, store_.parameter_count() - before});
      }
      b.pool = first ? pool1 : (last ? last_pool : 1);
      if (b.pool > 1) {
        if (len % b.pool != 0) throw std::logic_error("model: pooling does not divide " + base);
        len /= b.pool;
        table_.push_back({base + ".pool", "maxpool", "size=" + std::to_string(b.pool), {out, len}, 0});
      }
      b.dropout_after = first;
      if (b.dropout_after) table_.push_back({base + ".dropout", "dropout", "", {out, len}, 0});
      blocks.push_back(std::move(b));
      in = out;
    }
    return len;
  };

  const std::size_t t_len = add_branch("temporal", temporal_, 64, {8, 28, 28, nn::PadMode::zeros}, 8,
                                       8, {1, 3, 4, nn::PadMode::zeros}, 4, cbam);
  const std::size_t f_len =
      add_branch("frequency", frequency_, 512, {64, 224, 224, nn::PadMode::zeros}, 4, 6,
                 {1, 2, 3, nn::PadMode::zeros}, lstm ? 1 : 2, false);
  attention_length_ = nn::conv1d_output_length(kInputLength, 64, {8, 28, 28, nn::PadMode::zeros}) / 8;

  const std::size_t C = w.filters;
  std::size_t features = 0;
  if (lstm) {
    if (t_len != f_len) throw std::logic_error("model: branch lengths differ");
    const std::size_t H = w.lstm_hidden;
    table_.push_back({"sequence", "concat+transpose", "channels", {t_len, 2 * C}, 0});
    std::size_t before = store_.parameter_count();
    lstm_ = nn::BiLstmLayer<T>::create(store_, "lstm", 2 * C, H, seed);
    table_.push_back({"lstm", "bilstm", "hidden=" + std::to_string(H) + "x2", {t_len, 2 * H},
                      store_.parameter_count() - before});
    before = store_.parameter_count();
    shortcut_ = nn::DenseLayer<T>::create(store_, "shortcut", 2 * C, 2 * H, seed);
    table_.push_back({"shortcut", "dense+add", "per step " + std::to_string(2 * C) + "->" +
                                                   std::to_string(2 * H),
                      {t_len, 2 * H}, store_.parameter_count() - before});
    features = t_len * 2 * H;
  } else {
    features = C * (t_len + f_len);
    table_.push_back({"flatten", "flatten+concat", "", {features}, 0});
  }
  table_.push_back({"head.dropout", "dropout", "", {features}, 0});
  const std::size_t before = store_.parameter_count();
  head_.push_back(nn::DenseLayer<T>::create(store_, "head.fc", features, 2, seed));
  table_.push_back({"head.fc", "dense", std::to_string(features) + "->2", {2},
                    store_.parameter_count() - before});
}

template <typename T>
void Model<T>::build_heuristic() {
  const std::size_t F = widths(cfg_.profile).heuristic_filters;
  const std::uint64_t seed = cfg_.seed;
  const nn::Conv1dOptions opt{1, 31, 32,
                              cfg_.circular_padding ? nn::PadMode::circular : nn::PadMode::zeros};
  ConvBlock b;
  std::size_t before = store_.parameter_count();
  b.conv = nn::Conv1dLayer<T>::create(store_, "features.conv", 1, F, 64, opt, seed);
  table_.push_back({"features.conv", "conv1d", conv_detail(1, F, 64, opt), {F, kInputLength},
                    store_.parameter_count() - before});
  before = store_.parameter_count();
  b.bn = nn::BatchNormLayer<T>::create(store_, "features.bn", F);
  table_.push_back({"features.bn", "batchnorm+relu", "", {F, kInputLength},
                    store_.parameter_count() - before});
  temporal_.push_back(std::move(b));
  table_.push_back({"features.gap", "global_avg_pool", "", {F}, 0});
  before = store_.parameter_count();
  head_.push_back(nn::DenseLayer<T>::create(store_, "head.fc1", F, 8, seed));
  table_.push_back({"head.fc1", "dense+relu", std::to_string(F) + "->8", {8},
                    store_.parameter_count() - before});
  before = store_.parameter_count();
  head_.push_back(nn::DenseLayer<T>::create(store_, "head.fc2", 8, 2, seed));
  table_.push_back({"head.fc2", "dense", "8->2", {2}, store_.parameter_count() - before});
}

template <typename T>
void Model<T>::check_input(const nn::Tensor<T>& x) const {
  if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != kInputLength || x.dim(0) == 0) {
    throw std::invalid_argument("model: expected input [B,1," + std::to_string(kInputLength) +
                                "], got " + nn::shape_str(x.shape()));
  }
}

template <typename T>
Var<T> Model<T>::run_branch(const std::vector<ConvBlock>& blocks, Var<T> x,
                            nn::ForwardContext<T>& ctx, bool capture) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const ConvBlock& b = blocks[i];
    x = nn::relu(b.bn(b.conv(x), ctx.training));
    if (b.cbam) {
      x = (*b.cbam)(x);
      if (capture && ctx.attention_capture && i + 1 == blocks.size()) *ctx.attention_capture = x.value();
    }
    if (b.pool > 1) x = nn::max_pool1d(x, b.pool);
    if (b.dropout_after) x = nn::dropout(x, cfg_.dropout, ctx.training, ctx.rng);
  }
  return x;
}

template <typename T>
typename Model<T>::BranchOutputs Model<T>::branches(const nn::Tensor<T>& x,
                                                    nn::ForwardContext<T>& ctx) const {
  if (cfg_.kind == ModelKind::heuristic_1dcnn) {
    throw std::logic_error("model: heuristic_1dcnn has no branches");
  }
  check_input(x);
  const Var<T> in(x);
  BranchOutputs out;
  out.temporal = run_branch(temporal_, in, ctx, true);
  out.frequency = run_branch(frequency_, in, ctx, false);
  return out;
}

template <typename T>
Var<T> Model<T>::forward(const nn::Tensor<T>& x, nn::ForwardContext<T>& ctx) const {
  check_input(x);
  const std::size_t B = x.dim(0);
  if (cfg_.kind == ModelKind::heuristic_1dcnn) {
    Var<T> h = run_branch(temporal_, Var<T>(x), ctx, false);
    h = nn::reshape(nn::mean_axis(h, 2), {B, h.dim(1)});
    return head_[1](nn::relu(head_[0](h)));
  }
  const BranchOutputs br = branches(x, ctx);
  Var<T> feats;
  if (lstm_) {
    const Var<T> seq = nn::transpose12(nn::concat<T>({br.temporal, br.frequency}, 1));
    const std::size_t steps = seq.dim(1), width = seq.dim(2);
    const Var<T> rec = (*lstm_)(seq);
    const Var<T> skip =
        nn::reshape((*shortcut_)(nn::reshape(seq, {B * steps, width})), {B, steps, rec.dim(2)});
    feats = nn::reshape(nn::add(rec, skip), {B, steps * rec.dim(2)});
  } else {
    const auto flat = [B](const Var<T>& v) { return nn::reshape(v, {B, v.dim(1) * v.dim(2)}); };
    feats = nn::concat<T>({flat(br.temporal), flat(br.frequency)}, 1);
  }
  feats = nn::dropout(feats, cfg_.dropout, ctx.training, ctx.rng);
  return head_[0](feats);
}

template <typename T>
std::size_t Model<T>::cbam_count() const {
  return static_cast<std::size_t>(std::count_if(temporal_.begin(), temporal_.end(),
                                                [](const ConvBlock& b) { return b.cbam.has_value(); }));
}

template <typename T>
std::vector<Var<T>> Model<T>::feature_parameters() const {
  std::vector<Var<T>> out;
  for (const auto& e : store_.entries())
    if (e.trainable && e.name.rfind("head.", 0) != 0) out.push_back(e.var);
  return out;
}

template <typename T>
std::vector<Var<T>> Model<T>::head_parameters() const {
  return store_.parameters_with_prefix("head.");
}

template <typename T>
double Model<T>::attention_time_scale_s() const {
  if (attention_length_ == 0) throw std::logic_error("model: no temporal attention map");
  return kEpochSeconds / static_cast<double>(attention_length_);
}

template <typename T>
attention::AttentionMap Model<T>::attention_map(std::span<const T> epoch, std::size_t epoch_index,
                                                double edge_exclusion_s) const {
  if (!has_cbam(cfg_.kind)) {
    throw std::logic_error("attention map requested from model without CBAM: " +
                           to_string(cfg_.kind));
  }
  nn::Tensor<T> x({1, 1, epoch.size()});
  std::copy(epoch.begin(), epoch.end(), x.ptr());
  check_input(x);
  nn::NoGradGuard no_grad;
  nn::Tensor<T> captured;
  nn::ForwardContext<T> ctx;
  ctx.attention_capture = &captured;
  branches(x, ctx);
  nn::Tensor<double> a({captured.dim(1), captured.dim(2)});
  std::copy(captured.ptr(), captured.ptr() + captured.size(), a.ptr());
  auto m = attention::activation_attention_map(a, attention_time_scale_s(), edge_exclusion_s);
  m.epoch_index = epoch_index;
  return m;
}

template class Model<float>;
template class Model<double>;

nn::WeightFile to_weight_file(const Model<float>& model, const nlohmann::json& extra) {
  nn::WeightFile f;
  f.header = model.config().to_json();
  f.header["layers"] = layer_table_json(model.layer_table());
  f.header["parameter_count"] = model.store().parameter_count();
  for (const auto& [k, v] : extra.items()) f.header[k] = v;
  for (const auto& e : model.store().entries()) f.tensors.push_back({e.name, e.var.value()});
  return f;
}

std::unique_ptr<Model<float>> model_from_weight_file(const nn::WeightFile& file) {
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(file.header);
  } catch (const std::exception& e) {
    throw FormatError(std::string("weight file: bad model header: ") + e.what());
  }
  auto model = std::make_unique<Model<float>>(cfg);
  const auto& entries = model->store().entries();
  if (entries.size() != file.tensors.size()) {
    throw FormatError("weight file: expected " + std::to_string(entries.size()) + " tensors, found " +
                      std::to_string(file.tensors.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& t = file.tensors[i];
    if (t.name != entries[i].name || t.tensor.shape() != entries[i].var.shape()) {
      throw FormatError("weight file: tensor " + t.name + " " + nn::shape_str(t.tensor.shape()) +
                        " does not match " + entries[i].name + " " +
                        nn::shape_str(entries[i].var.shape()));
    }
    entries[i].var.node()->value = t.tensor;
  }
  return model;
}

}  // namespace eegart::models
