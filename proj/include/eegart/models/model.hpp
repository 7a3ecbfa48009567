#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eegart/attention/cbam.hpp"
#include "eegart/nn/train.hpp"
#include "eegart/nn/weights.hpp"
#include "json.hpp"

namespace eegart::models {

using nn::Var;

enum class ModelKind { cnn, cnn_lstm, cnn_cbam, cnn_cbam_lstm, heuristic_1dcnn };

std::string to_string(ModelKind k);
// Throws std::invalid_argument for an unknown name.
ModelKind model_kind_from_string(std::string_view s);
bool has_cbam(ModelKind k);
bool has_lstm(ModelKind k);
const std::vector<ModelKind>& all_model_kinds();

// toy divides every channel count (and the LSTM width) by four.
enum class Profile { toy, full };
std::string to_string(Profile p);
Profile profile_from_string(std::string_view s);

struct Widths {
  std::size_t first_filters;      // first conv of each branch
  std::size_t filters;            // remaining convs
  std::size_t lstm_hidden;        // per direction
  std::size_t heuristic_filters;
};
Widths widths(Profile p);

struct ModelConfig {
  ModelKind kind = ModelKind::cnn_cbam;
  Profile profile = Profile::toy;
  std::uint64_t seed = 0;
  double dropout = 0.5;
  std::size_t cbam_ratio = 8;
  bool circular_padding = false;  // heuristic_1dcnn only

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// One row per layer; out_shape excludes the batch dimension.
struct LayerRow {
  std::string name;
  std::string op;
  std::string detail;
  nn::Shape out_shape;
  std::size_t params = 0;
};

nlohmann::ordered_json layer_table_json(const std::vector<LayerRow>& rows);
std::string layer_table_markdown(const std::vector<LayerRow>& rows);

template <typename T>
class Model final : public nn::Classifier<T> {
 public:
  static constexpr std::size_t kInputLength = 2560;

  explicit Model(ModelConfig cfg);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  nn::ParamStore<T>& store() override { return store_; }
  const nn::ParamStore<T>& store() const { return store_; }
  // x [B,1,2560] -> logits [B,2].
  Var<T> forward(const nn::Tensor<T>& x, nn::ForwardContext<T>& ctx) const override;

  struct BranchOutputs {
    Var<T> temporal;   // after the last temporal pooling
    Var<T> frequency;  // after the last frequency pooling
  };
  // Two-branch kinds only.
  BranchOutputs branches(const nn::Tensor<T>& x, nn::ForwardContext<T>& ctx) const;

  const ModelConfig& config() const { return cfg_; }
  ModelKind kind() const { return cfg_.kind; }
  std::size_t cbam_count() const;
  const std::vector<LayerRow>& layer_table() const { return table_; }

  // Convolution/normalization/attention/recurrent parameters vs the final dense layers.
  std::vector<Var<T>> feature_parameters() const;
  std::vector<Var<T>> head_parameters() const;

  // Seconds of input covered by one step of the captured temporal map.
  double attention_time_scale_s() const;
  std::size_t attention_length() const { return attention_length_; }

  // Eval-mode forward of a single epoch, capturing the last temporal CBAM
  // output. Throws std::logic_error for kinds without CBAM.
  attention::AttentionMap attention_map(std::span<const T> epoch, std::size_t epoch_index = 0,
                                        double edge_exclusion_s = 0.7) const;

 private:
  struct ConvBlock {
    nn::Conv1dLayer<T> conv;
    nn::BatchNormLayer<T> bn;
    std::optional<attention::Cbam<T>> cbam;
    std::size_t pool = 1;
    bool dropout_after = false;
  };

  void build_two_branch();
  void build_heuristic();
  Var<T> run_branch(const std::vector<ConvBlock>& blocks, Var<T> x, nn::ForwardContext<T>& ctx,
                    bool capture) const;
  void check_input(const nn::Tensor<T>& x) const;

  ModelConfig cfg_;
  nn::ParamStore<T> store_;
  std::vector<LayerRow> table_;
  std::vector<ConvBlock> temporal_, frequency_;
  std::optional<nn::BiLstmLayer<T>> lstm_;
  std::optional<nn::DenseLayer<T>> shortcut_;
  std::vector<nn::DenseLayer<T>> head_;
  std::size_t attention_length_ = 0;
};

// Weight-file manifest: model config, layer table and any extra header fields.
nn::WeightFile to_weight_file(const Model<float>& model,
                              const nlohmann::json& extra = nlohmann::json::object());
// Rebuilds the model named in the header and loads its tensors. Throws
// FormatError when names or shapes disagree with the architecture.
std::unique_ptr<Model<float>> model_from_weight_file(const nn::WeightFile& file);

}  // namespace eegart::models
