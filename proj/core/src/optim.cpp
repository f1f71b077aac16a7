#include "naraim/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "naraim/errors.hpp"
#include "naraim/model.hpp"

namespace naraim {

std::string_view to_string(Schedule schedule) {
  return schedule == Schedule::kExponential ? "exponential" : "cosine";
}

Schedule parse_schedule(std::string_view text) {
  if (text == "exponential") return Schedule::kExponential;
  if (text == "cosine") return Schedule::kCosine;
  throw ConfigError("unknown schedule '" + std::string(text) + "'");
}

TrainConfig TrainConfig::paper(Phase phase) {
  TrainConfig cfg;
  cfg.phase = phase;
  if (phase == Phase::kFinetune) {
    cfg.beta2 = 0.999;
    cfg.min_lr = 1e-5;
    cfg.weight_decay = 0.1;
    cfg.grad_clip = 3.0;
    cfg.warmup_iters = 500;
    cfg.cooldown_iters = 0;
    cfg.total_iters = 50000;
    cfg.schedule = Schedule::kCosine;
  }
  return cfg;
}

TrainConfig TrainConfig::desk(Phase phase) {
  TrainConfig cfg = paper(phase);
  if (phase == Phase::kPretrain) {
    cfg.peak_lr = 3e-3;
    cfg.batch_size = 8;
    cfg.warmup_iters = 50;
    cfg.cooldown_iters = 100;
    cfg.total_iters = 500;
  } else {
    cfg.batch_size = 16;
    cfg.warmup_iters = 20;
    cfg.total_iters = 300;
  }
  return cfg;
}

void TrainConfig::validate() const {
  if (total_iters == 0) throw ConfigError("train: total_iters must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (!(grad_clip > 0.0)) throw ConfigError("train: grad_clip must be positive");
  if (warmup_iters > total_iters) throw ConfigError("train: warmup_iters exceeds total_iters");
  if (schedule == Schedule::kExponential && warmup_iters + cooldown_iters > total_iters) {
    throw ConfigError("train: warmup_iters + cooldown_iters exceeds total_iters");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: betas must lie in [0,1)");
  if (!(decay_rate > 0.0)) throw ConfigError("train: decay_rate must be positive");
}

double lr_at(std::size_t step, const TrainConfig& cfg) {
  if (step > cfg.total_iters) {
    throw ContractError("lr_at: step " + std::to_string(step) + " beyond total " + std::to_string(cfg.total_iters));
  }
  const double t = static_cast<double>(step);
  if (step < cfg.warmup_iters) return cfg.peak_lr * t / static_cast<double>(cfg.warmup_iters);

  if (cfg.schedule == Schedule::kCosine) {
    const std::size_t span = cfg.total_iters - cfg.warmup_iters;
    if (span == 0) return cfg.peak_lr;
    const double progress = (t - static_cast<double>(cfg.warmup_iters)) / static_cast<double>(span);
    return cfg.min_lr + 0.5 * (cfg.peak_lr - cfg.min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
  }

  // Exponential: decay exponent linear in step so the rate reaches
  // peak * decay_rate at cooldown start, then a linear ramp to min_lr.
  const std::size_t cooldown_start = cfg.total_iters - cfg.cooldown_iters;
  const double floor_lr = cfg.peak_lr * cfg.decay_rate;
  if (step < cooldown_start) {
    const double progress = (t - static_cast<double>(cfg.warmup_iters)) /
                            static_cast<double>(cooldown_start - cfg.warmup_iters);
    return cfg.peak_lr * std::pow(cfg.decay_rate, progress);
  }
  if (cfg.cooldown_iters == 0) return floor_lr;
  const double progress = (t - static_cast<double>(cooldown_start)) / static_cast<double>(cfg.cooldown_iters);
  return floor_lr + (cfg.min_lr - floor_lr) * progress;
}

double global_norm(const ParamTree& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double v : g.data()) sq += v * v;
  return std::sqrt(sq);
}

double clip_gradients(ParamTree& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractError("clip_gradients: max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& v : g.data()) v *= factor;
  }
  return norm;
}

void adamw_step(ParamTree& params, const ParamTree& grads, OptimizerState& state, double lr, const TrainConfig& cfg) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ContractError("adamw_step: gradient for unknown parameter " + name);
    Tensor& p = it->second;
    if (p.dims() != g.dims()) throw ShapeError("adamw_step: dims differ for " + name);
    Tensor& m = state.first_moment.try_emplace(name, p.dims()).first->second;
    Tensor& v = state.second_moment.try_emplace(name, p.dims()).first->second;
    const double decay = is_decayed_param(name, p) ? lr * cfg.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= decay * p[i];
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

}  // namespace naraim
