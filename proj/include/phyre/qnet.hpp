#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "phyre/environment.hpp"
#include "phyre/task.hpp"

namespace phyre {

/// Where the action conditions the observation features.
enum class FusionPoint
{
  First,    ///< after the first conv stage
  All,      ///< after every conv stage but the last
  Global,   ///< on the pooled feature vector
  PreFinal, ///< before the last conv stage
};

std::string_view to_string(FusionPoint p);
FusionPoint fusion_point_from_string(std::string_view name);

inline constexpr int kConvStages = 4;

struct QNetConfig
{
  Tier tier = Tier::B;
  int input_size = 64; ///< side of the downsampled observation; a divisor of 256
  std::array<int, kConvStages> channels{8, 16, 32, 32};
  int action_hidden = 512;
  FusionPoint fusion = FusionPoint::PreFinal;
  bool zero_head = false;
  std::uint64_t seed = 0;

  bool operator==(const QNetConfig&) const = default;
};

/// Per channel: out = gain * x + bias over a channel-major C x H x W map.
/// Throws Error{ShapeMismatch} when the sizes disagree.
template <class T>
std::vector<T> film_fuse(const std::vector<T>& features, int channels, const std::vector<T>& gains,
                         const std::vector<T>& biases);

/// Average-pools the one-hot planes to `size` x `size`, channel-major, row 0 at the bottom.
template <class T>
std::vector<T> downsample_observation(const ObservationImage& obs, int size);

/// Named parameter tensor inside the flat parameter vector.
struct TensorInfo
{
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Observation encoder + action encoder + FiLM fusion + sigmoid head.
template <class T>
class QNet
{
public:
  explicit QNet(const QNetConfig& config);

  const QNetConfig& config() const { return config_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  std::size_t input_length() const;

  /// Encoder activations up to the first fusion point; reused across actions.
  struct Trunk
  {
    std::vector<std::vector<T>> z; ///< pre-activation per computed stage
    std::vector<std::vector<T>> a; ///< post-ReLU per computed stage
  };

  Trunk encode(const std::vector<T>& obs) const;
  T logit(const Trunk& trunk, const Action& action) const;
  T score(const std::vector<T>& obs, const Action& action) const;
  /// Scores many actions against one observation, encoding it once.
  std::vector<T> score_batch(const std::vector<T>& obs, const std::vector<Action>& actions) const;

  struct Example
  {
    const Action* action = nullptr;
    T label = 0;
  };

  /// Adds d(sum of losses)/d(params) * scale into `grad` for examples sharing one
  /// observation and returns the summed binary cross-entropy.
  T accumulate_gradient(const std::vector<T>& obs, const std::vector<Example>& examples, T scale,
                        std::vector<T>& grad) const;

  /// Mean loss over examples sharing one observation.
  T loss(const std::vector<T>& obs, const std::vector<Example>& examples) const;

  std::uint64_t checksum() const;

private:
  struct Forward;
  std::size_t add_tensor(const std::string& name, std::vector<int> shape);
  int first_fusion_stage() const;
  bool fused_at(int stage) const;
  int film_offset(int stage) const;
  int film_width() const;
  void forward_tail(const Trunk& trunk, const Action& action, Forward& f) const;
  std::vector<T> action_input(const Action& action) const;

  QNetConfig config_;
  std::vector<TensorInfo> tensors_;
  std::vector<T> params_;
  std::array<std::size_t, kConvStages> conv_w_{}, conv_b_{};
  std::size_t a1_w_ = 0, a1_b_ = 0, a2_w_ = 0, a2_b_ = 0, head_w_ = 0, head_b_ = 0;
  std::array<int, kConvStages + 1> side_{};
};

/// Binary cross-entropy of a logit against a label in [0, 1].
template <class T>
T bce_with_logit(T z, T label);

template <class T>
T sigmoid(T z);

/// Analytic versus central-difference gradients on up to `per_tensor` random entries of
/// every parameter tensor. Returns the largest relative error per tensor.
struct GradCheckResult
{
  std::vector<std::pair<std::string, double>> per_tensor;
  double max_relative_error = 0.0;
  double gradient_norm = 0.0;
};

GradCheckResult grad_check(QNet<double>& net, const std::vector<double>& obs, const Action& action,
                           double label, int per_tensor = 6, double h = 1e-5,
                           std::uint64_t seed = 0);

void save_checkpoint(const QNet<float>& net, const std::filesystem::path& file);
/// Throws Error{ShapeMismatch} when the manifest disagrees with the stored config.
QNet<float> load_checkpoint(const std::filesystem::path& file);

/// Copies parameters between precisions (same config).
QNet<double> to_double(const QNet<float>& net);

} // namespace phyre
