#include "phyre/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "phyre/error.hpp"
#include "phyre/rng.hpp"
#include "phyre/scene_json.hpp"

namespace phyre {

std::string_view to_string(FusionPoint p)
{
  switch (p)
  {
  case FusionPoint::First: return "first";
  case FusionPoint::All: return "all";
  case FusionPoint::Global: return "global";
  case FusionPoint::PreFinal: return "prefinal";
  }
  return "?";
}

FusionPoint fusion_point_from_string(std::string_view name)
{
  for (FusionPoint p : {FusionPoint::First, FusionPoint::All, FusionPoint::Global, FusionPoint::PreFinal})
  {
    if (to_string(p) == name)
    {
      return p;
    }
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown fusion point '" + std::string(name) + "'");
}

template <class T>
std::vector<T> film_fuse(const std::vector<T>& features, int channels, const std::vector<T>& gains,
                         const std::vector<T>& biases)
{
  if (channels <= 0 || features.size() % channels != 0 || gains.size() != static_cast<std::size_t>(channels) ||
      biases.size() != static_cast<std::size_t>(channels))
  {
    throw Error(ErrorCode::ShapeMismatch, "film_fuse: channel counts disagree");
  }
  const std::size_t n = features.size() / channels;
  std::vector<T> out(features.size());
  for (int c = 0; c < channels; ++c)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      out[c * n + i] = gains[c] * features[c * n + i] + biases[c];
    }
  }
  return out;
}

template <class T>
std::vector<T> downsample_observation(const ObservationImage& obs, int size)
{
  if (size <= 0 || kObservationSize % size != 0)
  {
    throw Error(ErrorCode::ShapeMismatch, "observation size must divide 256");
  }
  const int f = kObservationSize / size;
  const T inv = T(1) / static_cast<T>(f * f);
  std::vector<T> out(static_cast<std::size_t>(kCategoryCount) * size * size, T(0));
  for (int j = 0; j < kObservationSize; ++j)
  {
    for (int i = 0; i < kObservationSize; ++i)
    {
      const int c = obs.at(i, j) - 1;
      out[(static_cast<std::size_t>(c) * size + j / f) * size + i / f] += inv;
    }
  }
  return out;
}

template <class T>
T sigmoid(T z)
{
  return z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

template <class T>
T bce_with_logit(T z, T label)
{
  // softplus(z) - label * z, computed without overflow
  const T softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - label * z;
}

namespace {

// 3x3 convolution, stride 2, zero padding 1; square maps, channel-major.
template <class T>
void conv_forward(const T* in, int cin, int s_in, const T* w, const T* b, int cout, T* out)
{
  const int s_out = s_in / 2;
  for (int co = 0; co < cout; ++co)
  {
    T* o = out + static_cast<std::size_t>(co) * s_out * s_out;
    std::fill(o, o + s_out * s_out, b[co]);
    for (int ci = 0; ci < cin; ++ci)
    {
      const T* src = in + static_cast<std::size_t>(ci) * s_in * s_in;
      const T* k = w + (static_cast<std::size_t>(co) * cin + ci) * 9;
      for (int oy = 0; oy < s_out; ++oy)
      {
        for (int ky = 0; ky < 3; ++ky)
        {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= s_in)
          {
            continue;
          }
          const T* row = src + static_cast<std::size_t>(iy) * s_in;
          T* orow = o + static_cast<std::size_t>(oy) * s_out;
          for (int kx = 0; kx < 3; ++kx)
          {
            const T kv = k[ky * 3 + kx];
            for (int ox = 0; ox < s_out; ++ox)
            {
              const int ix = 2 * ox - 1 + kx;
              if (ix >= 0 && ix < s_in)
              {
                orow[ox] += kv * row[ix];
              }
            }
          }
        }
      }
    }
  }
}

template <class T>
void conv_backward(const T* in, int cin, int s_in, const T* w, int cout, const T* dout, T* dw, T* db,
                   T* din)
{
  const int s_out = s_in / 2;
  for (int co = 0; co < cout; ++co)
  {
    const T* d = dout + static_cast<std::size_t>(co) * s_out * s_out;
    T sum = 0;
    for (int i = 0; i < s_out * s_out; ++i)
    {
      sum += d[i];
    }
    db[co] += sum;
    for (int ci = 0; ci < cin; ++ci)
    {
      const T* src = in + static_cast<std::size_t>(ci) * s_in * s_in;
      T* dsrc = din != nullptr ? din + static_cast<std::size_t>(ci) * s_in * s_in : nullptr;
      const std::size_t kbase = (static_cast<std::size_t>(co) * cin + ci) * 9;
      for (int ky = 0; ky < 3; ++ky)
      {
        for (int kx = 0; kx < 3; ++kx)
        {
          const T kv = w[kbase + ky * 3 + kx];
          T acc = 0;
          for (int oy = 0; oy < s_out; ++oy)
          {
            const int iy = 2 * oy - 1 + ky;
            if (iy < 0 || iy >= s_in)
            {
              continue;
            }
            for (int ox = 0; ox < s_out; ++ox)
            {
              const int ix = 2 * ox - 1 + kx;
              if (ix < 0 || ix >= s_in)
              {
                continue;
              }
              const T g = d[oy * s_out + ox];
              acc += g * src[iy * s_in + ix];
              if (dsrc != nullptr)
              {
                dsrc[iy * s_in + ix] += g * kv;
              }
            }
          }
          dw[kbase + ky * 3 + kx] += acc;
        }
      }
    }
  }
}

template <class T>
T gaussian(KeyedRng& rng)
{
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return static_cast<T>(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
}

// Fusion locations: conv stages 1..4, and 5 for the pooled vector.
constexpr int kPooled = kConvStages + 1;

} // namespace

template <class T>
struct QNet<T>::Forward
{
  std::vector<T> x, hpre, h, film;
  std::array<std::vector<T>, kConvStages + 1> z, a, out; ///< by stage (1-based)
  std::vector<T> pooled, fused_pooled;
  std::vector<int> argmax;
  T logit = 0;
};

template <class T>
std::size_t QNet<T>::add_tensor(const std::string& name, std::vector<int> shape)
{
  std::size_t size = 1;
  for (int d : shape)
  {
    size *= static_cast<std::size_t>(d);
  }
  TensorInfo info{name, std::move(shape), params_.size(), size};
  params_.resize(params_.size() + size, T(0));
  tensors_.push_back(info);
  return info.offset;
}

template <class T>
QNet<T>::QNet(const QNetConfig& config) : config_(config)
{
  if (config.input_size <= 0 || kObservationSize % config.input_size != 0 ||
      config.input_size % (1 << kConvStages) != 0)
  {
    throw Error(ErrorCode::ShapeMismatch, "input size must divide 256 and be a multiple of 16");
  }
  side_[0] = config.input_size;
  for (int k = 1; k <= kConvStages; ++k)
  {
    side_[k] = side_[k - 1] / 2;
  }
  int cin = kCategoryCount;
  for (int k = 0; k < kConvStages; ++k)
  {
    conv_w_[k] = add_tensor("conv" + std::to_string(k + 1) + ".weight", {config.channels[k], cin, 3, 3});
    conv_b_[k] = add_tensor("conv" + std::to_string(k + 1) + ".bias", {config.channels[k]});
    cin = config.channels[k];
  }
  const int d = action_dims(config.tier);
  a1_w_ = add_tensor("action1.weight", {config.action_hidden, d});
  a1_b_ = add_tensor("action1.bias", {config.action_hidden});
  a2_w_ = add_tensor("action2.weight", {2 * film_width(), config.action_hidden});
  a2_b_ = add_tensor("action2.bias", {2 * film_width()});
  head_w_ = add_tensor("head.weight", {1, config.channels[kConvStages - 1]});
  head_b_ = add_tensor("head.bias", {1});

  KeyedRng rng(mix_key(config.seed, 0x716e6574ULL));
  auto fill = [&](std::size_t offset, std::size_t n, double stddev) {
    for (std::size_t i = 0; i < n; ++i)
    {
      params_[offset + i] = static_cast<T>(stddev) * gaussian<T>(rng);
    }
  };
  cin = kCategoryCount;
  for (int k = 0; k < kConvStages; ++k)
  {
    fill(conv_w_[k], tensors_[2 * k].size, std::sqrt(2.0 / (9.0 * cin)));
    cin = config.channels[k];
  }
  fill(a1_w_, static_cast<std::size_t>(config.action_hidden) * d, std::sqrt(2.0 / d));
  fill(a2_w_, static_cast<std::size_t>(2 * film_width()) * config.action_hidden,
       0.1 / std::sqrt(static_cast<double>(config.action_hidden)));
  if (!config.zero_head)
  {
    fill(head_w_, config.channels[kConvStages - 1],
         1.0 / std::sqrt(static_cast<double>(config.channels[kConvStages - 1])));
  }
}

template <class T>
std::size_t QNet<T>::input_length() const
{
  return static_cast<std::size_t>(kCategoryCount) * config_.input_size * config_.input_size;
}

template <class T>
bool QNet<T>::fused_at(int stage) const
{
  switch (config_.fusion)
  {
  case FusionPoint::First: return stage == 1;
  case FusionPoint::All: return stage >= 1 && stage < kConvStages;
  case FusionPoint::PreFinal: return stage == kConvStages - 1;
  case FusionPoint::Global: return stage == kPooled;
  }
  return false;
}

template <class T>
int QNet<T>::first_fusion_stage() const
{
  for (int s = 1; s <= kPooled; ++s)
  {
    if (fused_at(s))
    {
      return s;
    }
  }
  return kPooled;
}

template <class T>
int QNet<T>::film_offset(int stage) const
{
  int off = 0;
  for (int s = 1; s < stage; ++s)
  {
    if (fused_at(s))
    {
      off += config_.channels[std::min(s, kConvStages) - 1];
    }
  }
  return off;
}

template <class T>
int QNet<T>::film_width() const
{
  return film_offset(kPooled + 1);
}

template <class T>
std::vector<T> QNet<T>::action_input(const Action& action) const
{
  if (action.tier != config_.tier)
  {
    throw Error(ErrorCode::ShapeMismatch, "action tier does not match the network");
  }
  std::vector<T> x(action.dims());
  for (int i = 0; i < action.dims(); ++i)
  {
    x[i] = static_cast<T>(2.0 * action.coords[i] - 1.0);
  }
  return x;
}

template <class T>
typename QNet<T>::Trunk QNet<T>::encode(const std::vector<T>& obs) const
{
  if (obs.size() != input_length())
  {
    throw Error(ErrorCode::ShapeMismatch, "observation has the wrong size");
  }
  const int last = std::min(first_fusion_stage(), kConvStages);
  Trunk t;
  const T* in = obs.data();
  int cin = kCategoryCount;
  for (int k = 1; k <= last; ++k)
  {
    const int c = config_.channels[k - 1];
    std::vector<T> z(static_cast<std::size_t>(c) * side_[k] * side_[k]);
    conv_forward(in, cin, side_[k - 1], &params_[conv_w_[k - 1]], &params_[conv_b_[k - 1]], c, z.data());
    std::vector<T> a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
    {
      a[i] = std::max(z[i], T(0));
    }
    t.z.push_back(std::move(z));
    t.a.push_back(std::move(a));
    in = t.a.back().data();
    cin = c;
  }
  return t;
}

template <class T>
void QNet<T>::forward_tail(const Trunk& trunk, const Action& action, Forward& f) const
{
  const int hidden = config_.action_hidden;
  const int d = action.dims();
  const int fw = film_width();
  f.x = action_input(action);
  f.hpre.assign(hidden, T(0));
  f.h.assign(hidden, T(0));
  for (int j = 0; j < hidden; ++j)
  {
    T s = params_[a1_b_ + j];
    for (int i = 0; i < d; ++i)
    {
      s += params_[a1_w_ + static_cast<std::size_t>(j) * d + i] * f.x[i];
    }
    f.hpre[j] = s;
    f.h[j] = std::max(s, T(0));
  }
  f.film.assign(2 * fw, T(0));
  for (int o = 0; o < 2 * fw; ++o)
  {
    T s = params_[a2_b_ + o];
    const T* row = &params_[a2_w_ + static_cast<std::size_t>(o) * hidden];
    for (int j = 0; j < hidden; ++j)
    {
      s += row[j] * f.h[j];
    }
    f.film[o] = s;
  }

  const int m = std::min(first_fusion_stage(), kConvStages);
  for (int k = m; k <= kConvStages; ++k)
  {
    const int c = config_.channels[k - 1];
    const std::size_t n = static_cast<std::size_t>(side_[k]) * side_[k];
    if (k == m)
    {
      f.z[k] = trunk.z[k - 1];
      f.a[k] = trunk.a[k - 1];
    }
    else
    {
      const int cin = config_.channels[k - 2];
      f.z[k].assign(c * n, T(0));
      conv_forward(f.out[k - 1].data(), cin, side_[k - 1], &params_[conv_w_[k - 1]],
                   &params_[conv_b_[k - 1]], c, f.z[k].data());
      f.a[k].resize(f.z[k].size());
      for (std::size_t i = 0; i < f.z[k].size(); ++i)
      {
        f.a[k][i] = std::max(f.z[k][i], T(0));
      }
    }
    f.out[k] = f.a[k];
    if (fused_at(k))
    {
      const int off = film_offset(k);
      for (int ch = 0; ch < c; ++ch)
      {
        const T gain = T(1) + f.film[off + ch];
        const T bias = f.film[fw + off + ch];
        for (std::size_t i = 0; i < n; ++i)
        {
          f.out[k][ch * n + i] = gain * f.a[k][ch * n + i] + bias;
        }
      }
    }
  }

  const int c4 = config_.channels[kConvStages - 1];
  const std::size_t n4 = static_cast<std::size_t>(side_[kConvStages]) * side_[kConvStages];
  f.pooled.assign(c4, T(0));
  f.argmax.assign(c4, 0);
  for (int ch = 0; ch < c4; ++ch)
  {
    const T* v = &f.out[kConvStages][ch * n4];
    std::size_t best = 0;
    for (std::size_t i = 1; i < n4; ++i)
    {
      if (v[i] > v[best])
      {
        best = i;
      }
    }
    f.argmax[ch] = static_cast<int>(best);
    f.pooled[ch] = v[best];
  }
  f.fused_pooled = f.pooled;
  if (fused_at(kPooled))
  {
    const int off = film_offset(kPooled);
    for (int ch = 0; ch < c4; ++ch)
    {
      f.fused_pooled[ch] = (T(1) + f.film[off + ch]) * f.pooled[ch] + f.film[fw + off + ch];
    }
  }
  T s = params_[head_b_];
  for (int ch = 0; ch < c4; ++ch)
  {
    s += params_[head_w_ + ch] * f.fused_pooled[ch];
  }
  f.logit = s;
}

template <class T>
T QNet<T>::logit(const Trunk& trunk, const Action& action) const
{
  Forward f;
  forward_tail(trunk, action, f);
  return f.logit;
}

template <class T>
T QNet<T>::score(const std::vector<T>& obs, const Action& action) const
{
  return sigmoid(logit(encode(obs), action));
}

template <class T>
std::vector<T> QNet<T>::score_batch(const std::vector<T>& obs, const std::vector<Action>& actions) const
{
  const Trunk trunk = encode(obs);
  std::vector<T> out;
  out.reserve(actions.size());
  Forward f;
  for (const Action& a : actions)
  {
    forward_tail(trunk, a, f);
    out.push_back(sigmoid(f.logit));
  }
  return out;
}

template <class T>
T QNet<T>::accumulate_gradient(const std::vector<T>& obs, const std::vector<Example>& examples, T scale,
                               std::vector<T>& grad) const
{
  if (grad.size() != params_.size())
  {
    grad.assign(params_.size(), T(0));
  }
  const Trunk trunk = encode(obs);
  const int m = std::min(first_fusion_stage(), kConvStages);
  const int fw = film_width();
  const int hidden = config_.action_hidden;
  std::vector<T> d_boundary(trunk.a[m - 1].size(), T(0));
  Forward f;
  T total = 0;
  std::array<std::vector<T>, kConvStages + 1> d_out;
  for (const Example& ex : examples)
  {
    forward_tail(trunk, *ex.action, f);
    total += bce_with_logit(f.logit, ex.label);
    const T dl = (sigmoid(f.logit) - ex.label) * scale;
    std::vector<T> dfilm(2 * fw, T(0));

    const int c4 = config_.channels[kConvStages - 1];
    const std::size_t n4 = static_cast<std::size_t>(side_[kConvStages]) * side_[kConvStages];
    std::vector<T> dpooled(c4);
    grad[head_b_] += dl;
    for (int ch = 0; ch < c4; ++ch)
    {
      grad[head_w_ + ch] += dl * f.fused_pooled[ch];
      dpooled[ch] = dl * params_[head_w_ + ch];
    }
    if (fused_at(kPooled))
    {
      const int off = film_offset(kPooled);
      for (int ch = 0; ch < c4; ++ch)
      {
        dfilm[off + ch] += dpooled[ch] * f.pooled[ch];
        dfilm[fw + off + ch] += dpooled[ch];
        dpooled[ch] *= T(1) + f.film[off + ch];
      }
    }
    d_out[kConvStages].assign(c4 * n4, T(0));
    for (int ch = 0; ch < c4; ++ch)
    {
      d_out[kConvStages][ch * n4 + f.argmax[ch]] = dpooled[ch];
    }
    for (int k = kConvStages; k >= m; --k)
    {
      const int c = config_.channels[k - 1];
      const std::size_t n = static_cast<std::size_t>(side_[k]) * side_[k];
      std::vector<T>& da = d_out[k];
      if (fused_at(k))
      {
        const int off = film_offset(k);
        for (int ch = 0; ch < c; ++ch)
        {
          T sg = 0, sb = 0;
          const T gain = T(1) + f.film[off + ch];
          for (std::size_t i = 0; i < n; ++i)
          {
            sg += da[ch * n + i] * f.a[k][ch * n + i];
            sb += da[ch * n + i];
            da[ch * n + i] *= gain;
          }
          dfilm[off + ch] += sg;
          dfilm[fw + off + ch] += sb;
        }
      }
      if (k == m)
      {
        for (std::size_t i = 0; i < da.size(); ++i)
        {
          d_boundary[i] += da[i];
        }
        break;
      }
      for (std::size_t i = 0; i < da.size(); ++i)
      {
        if (f.z[k][i] <= T(0))
        {
          da[i] = T(0);
        }
      }
      const int cin = config_.channels[k - 2];
      d_out[k - 1].assign(static_cast<std::size_t>(cin) * side_[k - 1] * side_[k - 1], T(0));
      conv_backward(f.out[k - 1].data(), cin, side_[k - 1], &params_[conv_w_[k - 1]], c, da.data(),
                    &grad[conv_w_[k - 1]], &grad[conv_b_[k - 1]], d_out[k - 1].data());
    }

    const int d = ex.action->dims();
    std::vector<T> dh(hidden, T(0));
    for (int o = 0; o < 2 * fw; ++o)
    {
      if (dfilm[o] == T(0))
      {
        continue;
      }
      grad[a2_b_ + o] += dfilm[o];
      const std::size_t row = a2_w_ + static_cast<std::size_t>(o) * hidden;
      for (int j = 0; j < hidden; ++j)
      {
        grad[row + j] += dfilm[o] * f.h[j];
        dh[j] += dfilm[o] * params_[row + j];
      }
    }
    for (int j = 0; j < hidden; ++j)
    {
      if (f.hpre[j] <= T(0))
      {
        continue;
      }
      grad[a1_b_ + j] += dh[j];
      for (int i = 0; i < d; ++i)
      {
        grad[a1_w_ + static_cast<std::size_t>(j) * d + i] += dh[j] * f.x[i];
      }
    }
  }

  // Encoder stages before the first fusion point run once per observation.
  std::vector<T> da = std::move(d_boundary);
  for (int k = m; k >= 1; --k)
  {
    for (std::size_t i = 0; i < da.size(); ++i)
    {
      if (trunk.z[k - 1][i] <= T(0))
      {
        da[i] = T(0);
      }
    }
    const int c = config_.channels[k - 1];
    const int cin = k == 1 ? kCategoryCount : config_.channels[k - 2];
    const T* in = k == 1 ? obs.data() : trunk.a[k - 2].data();
    std::vector<T> din;
    if (k > 1)
    {
      din.assign(static_cast<std::size_t>(cin) * side_[k - 1] * side_[k - 1], T(0));
    }
    conv_backward(in, cin, side_[k - 1], &params_[conv_w_[k - 1]], c, da.data(), &grad[conv_w_[k - 1]],
                  &grad[conv_b_[k - 1]], k > 1 ? din.data() : nullptr);
    da = std::move(din);
  }
  return total;
}

template <class T>
T QNet<T>::loss(const std::vector<T>& obs, const std::vector<Example>& examples) const
{
  if (examples.empty())
  {
    return T(0);
  }
  const Trunk trunk = encode(obs);
  T total = 0;
  for (const Example& ex : examples)
  {
    total += bce_with_logit(logit(trunk, *ex.action), ex.label);
  }
  return total / static_cast<T>(examples.size());
}

template <class T>
std::uint64_t QNet<T>::checksum() const
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params_.data());
  for (std::size_t i = 0; i < params_.size() * sizeof(T); ++i)
  {
    h = (h ^ bytes[i]) * 0x100000001b3ULL;
  }
  return h;
}

template class QNet<float>;
template class QNet<double>;
template std::vector<float> film_fuse(const std::vector<float>&, int, const std::vector<float>&,
                                      const std::vector<float>&);
template std::vector<double> film_fuse(const std::vector<double>&, int, const std::vector<double>&,
                                       const std::vector<double>&);
template std::vector<float> downsample_observation(const ObservationImage&, int);
template std::vector<double> downsample_observation(const ObservationImage&, int);
template float sigmoid(float);
template double sigmoid(double);
template float bce_with_logit(float, float);
template double bce_with_logit(double, double);

GradCheckResult grad_check(QNet<double>& net, const std::vector<double>& obs, const Action& action,
                           double label, int per_tensor, double h, std::uint64_t seed)
{
  const std::vector<QNet<double>::Example> ex{{&action, label}};
  std::vector<double> grad(net.params().size(), 0.0);
  net.accumulate_gradient(obs, ex, 1.0, grad);
  GradCheckResult result;
  double norm = 0.0;
  for (double g : grad)
  {
    norm += g * g;
  }
  result.gradient_norm = std::sqrt(norm);
  KeyedRng rng(mix_key(seed, 0x6772616443ULL));
  for (const TensorInfo& t : net.tensors())
  {
    double worst = 0.0;
    const int n = static_cast<int>(std::min<std::size_t>(t.size, static_cast<std::size_t>(per_tensor)));
    for (int s = 0; s < n; ++s)
    {
      const std::size_t i = t.offset + (t.size <= static_cast<std::size_t>(per_tensor) ? s : rng.below(t.size));
      double& p = net.params()[i];
      const double saved = p;
      p = saved + h;
      const double up = net.loss(obs, ex);
      p = saved - h;
      const double down = net.loss(obs, ex);
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - grad[i]) / denom);
    }
    result.per_tensor.emplace_back(t.name, worst);
    result.max_relative_error = std::max(result.max_relative_error, worst);
  }
  return result;
}

namespace {

constexpr char kMagic[8] = {'P', 'H', 'Y', 'Q', 'N', 'E', 'T', '1'};

Json config_json(const QNetConfig& c)
{
  return {{"tier", std::string(to_string(c.tier))},
          {"input_size", c.input_size},
          {"channels", c.channels},
          {"action_hidden", c.action_hidden},
          {"fusion", std::string(to_string(c.fusion))},
          {"zero_head", c.zero_head},
          {"seed", c.seed}};
}

QNetConfig config_from_json(const Json& j)
{
  QNetConfig c;
  c.tier = tier_from_string(j.at("tier").get<std::string>());
  c.input_size = j.at("input_size").get<int>();
  c.channels = j.at("channels").get<std::array<int, kConvStages>>();
  c.action_hidden = j.at("action_hidden").get<int>();
  c.fusion = fusion_point_from_string(j.at("fusion").get<std::string>());
  c.zero_head = j.at("zero_head").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

template <class V>
void put(std::ostream& out, V v)
{
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class V>
V get(std::istream& in)
{
  V v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
  {
    throw Error(ErrorCode::ParseError, "truncated checkpoint");
  }
  return v;
}

void put_string(std::ostream& out, const std::string& s)
{
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in)
{
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 20))
  {
    throw Error(ErrorCode::ParseError, "implausible string length in checkpoint");
  }
  std::string s(n, '\0');
  if (!in.read(s.data(), n))
  {
    throw Error(ErrorCode::ParseError, "truncated checkpoint");
  }
  return s;
}

} // namespace

void save_checkpoint(const QNet<float>& net, const std::filesystem::path& file)
{
  std::ofstream out(file, std::ios::binary);
  if (!out)
  {
    throw Error(ErrorCode::ParseError, "cannot write " + file.string());
  }
  out.write(kMagic, sizeof kMagic);
  put_string(out, config_json(net.config()).dump());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.tensors().size()));
  for (const TensorInfo& t : net.tensors())
  {
    put_string(out, t.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape)
    {
      put<std::int32_t>(out, d);
    }
  }
  put<std::uint64_t>(out, net.params().size());
  out.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(net.params().size() * sizeof(float)));
  put<std::uint64_t>(out, net.checksum());
}

QNet<float> load_checkpoint(const std::filesystem::path& file)
{
  std::ifstream in(file, std::ios::binary);
  if (!in)
  {
    throw Error(ErrorCode::ParseError, "cannot open " + file.string());
  }
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
  {
    throw Error(ErrorCode::ParseError, file.string() + " is not a q-net checkpoint");
  }
  QNetConfig config;
  try
  {
    config = config_from_json(Json::parse(get_string(in)));
  }
  catch (const Json::exception& e)
  {
    throw Error(ErrorCode::ParseError, std::string("bad checkpoint config: ") + e.what());
  }
  QNet<float> net(config);
  const auto count = get<std::uint32_t>(in);
  if (count != net.tensors().size())
  {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor count differs from the config");
  }
  for (const TensorInfo& t : net.tensors())
  {
    const std::string name = get_string(in);
    const auto rank = get<std::uint32_t>(in);
    std::vector<int> shape(rank);
    for (auto& d : shape)
    {
      d = get<std::int32_t>(in);
    }
    if (name != t.name || shape != t.shape)
    {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor " + name + " does not match " + t.name);
    }
  }
  if (get<std::uint64_t>(in) != net.params().size())
  {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint parameter count differs from the config");
  }
  if (!in.read(reinterpret_cast<char*>(net.params().data()),
               static_cast<std::streamsize>(net.params().size() * sizeof(float))))
  {
    throw Error(ErrorCode::ParseError, "truncated checkpoint");
  }
  if (get<std::uint64_t>(in) != net.checksum())
  {
    throw Error(ErrorCode::ParseError, "checkpoint checksum mismatch");
  }
  return net;
}

QNet<double> to_double(const QNet<float>& net)
{
  QNet<double> out(net.config());
  for (std::size_t i = 0; i < net.params().size(); ++i)
  {
    out.params()[i] = net.params()[i];
  }
  return out;
}

} // namespace phyre
