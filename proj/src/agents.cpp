#include "platoon/agents.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace platoon {

std::vector<int> idle_action_set(const SensingRow& busy_row) {
  std::vector<int> out;
  for (std::size_t m = 0; m < busy_row.size(); ++m)
    if (busy_row[m] == 0) out.push_back(static_cast<int>(m));
  return out;
}

int random_select(std::span<const int> idle, int previous, Rng& rng,
                  std::size_t& saturation) {
  if (idle.empty()) {
    ++saturation;
    return previous >= 0 ? previous : 0;
  }
  return idle[uniform_index(rng, idle.size())];
}

std::vector<double> History::encode(int n_vrb) const {
  std::vector<double> x(2 * static_cast<std::size_t>(length_), 0.0);
  const std::size_t pad = length_ - items_.size();
  for (std::size_t i = 0; i < items_.size(); ++i) {
    x[2 * (pad + i)] = static_cast<double>(items_[i].action) / n_vrb;
    x[2 * (pad + i) + 1] = items_[i].observation == Feedback::ack ? 1.0 : 0.0;
  }
  return x;
}

int masked_argmax(std::span<const double> q, std::span<const int> allowed) {
  int best = -1;
  double best_q = -std::numeric_limits<double>::infinity();
  for (int a : allowed) {
    if (q[a] > best_q || (q[a] == best_q && a < best)) {
      best = a;
      best_q = q[a];
    }
  }
  return best;
}

int select_action(const QNetwork& q, std::span<const double> state,
                  std::span<const int> idle, double epsilon, int previous, Rng& rng,
                  std::size_t& saturation) {
  if (idle.empty()) return random_select(idle, previous, rng, saturation);
  if (uniform01(rng) < epsilon) return random_select(idle, previous, rng, saturation);
  const auto values = q.forward(state);
  return masked_argmax(values, idle);
}

double td_target(double r_next, std::span<const double> s_next, const QNetwork& q,
                 double gamma, std::span<const int> next_idle) {
  if (gamma == 0.0) return r_next;
  const auto values = q.forward(s_next);
  double best = -std::numeric_limits<double>::infinity();
  if (next_idle.empty()) {
    for (double v : values) best = std::max(best, v);
  } else {
    for (int a : next_idle) best = std::max(best, values[a]);
  }
  return r_next + gamma * best;
}

void ReplayMemory::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

void DrlHyperParams::validate() const {
  if (!(learning_rate >= 0.0 && learning_rate <= 1.0))
    throw std::invalid_argument("learning_rate must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(epsilon_initial >= 0.0 && epsilon_initial <= 1.0) ||
      !(epsilon_min >= 0.0 && epsilon_min <= 1.0))
    throw std::invalid_argument("epsilon values must lie in [0, 1]");
  if (!(epsilon_decay >= 0.0 && epsilon_decay <= 1.0))
    throw std::invalid_argument("epsilon_decay must lie in [0, 1]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (memory_size < 1) throw std::invalid_argument("memory_size must be >= 1");
  if (!(grad_clip_norm >= 0.0)) throw std::invalid_argument("grad_clip_norm must be >= 0");
  if (decay_interval_periods < 1) throw std::invalid_argument("decay_interval_periods must be >= 1");
  shape.validate();
}

double train_on(QNetwork& q, std::span<const Transition* const> batch,
                const DrlHyperParams& hyper) {
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const Transition* t : batch) {
    std::span<const int> mask;
    if (hyper.masked_target) mask = t->next_idle;
    targets.push_back(td_target(t->reward, t->next_state, q, hyper.gamma, mask));
  }

  std::vector<double> grad(q.params().size(), 0.0);
  QNetwork::Activations act;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    q.forward(batch[b]->state, act);
    const double err = targets[b] - act.q[batch[b]->action];
    // d/dtheta (v - Q)^2 = -2 (v - Q) dQ/dtheta
    q.backward(batch[b]->state, act, batch[b]->action, -2.0 * err, grad);
  }
  double step = hyper.learning_rate;
  if (hyper.grad_clip_norm > 0.0) {
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm > hyper.grad_clip_norm) step *= hyper.grad_clip_norm / norm;
  }
  auto params = q.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= step * grad[i];

  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    q.forward(batch[b]->state, act);
    const double err = targets[b] - act.q[batch[b]->action];
    loss += err * err;
  }
  if (!std::isfinite(loss))
    throw TrainingError("non-finite TD loss (" + std::to_string(loss) + ") after update");
  return loss;
}

double train_step(QNetwork& q, const ReplayMemory& memory, const DrlHyperParams& hyper,
                  Rng& rng) {
  if (memory.empty()) throw TrainingError("train_step called with empty replay memory");
  std::vector<const Transition*> batch;
  batch.reserve(hyper.batch_size);
  for (int b = 0; b < hyper.batch_size; ++b) batch.push_back(&memory.sample(rng));
  return train_on(q, batch, hyper);
}

int RandomAgent::choose(const SensingRow& prev_busy_row, Rng& rng) {
  const auto idle = idle_action_set(prev_busy_row);
  previous_ = random_select(idle, previous_, rng, saturation_);
  return previous_;
}

double RandomAgent::learn(Feedback, const SensingRow&, Rng&) {
  return std::numeric_limits<double>::quiet_NaN();
}

static DrlHyperParams with_actions(DrlHyperParams h, int n_vrb) {
  h.shape.actions = n_vrb;
  h.validate();
  return h;
}

DrlAgent::DrlAgent(int n_vrb, const DrlHyperParams& hyper, Rng& rng)
    : n_vrb_(n_vrb),
      hyper_(with_actions(hyper, n_vrb)),
      q_(hyper_.shape, rng),
      history_(hyper_.shape.history),
      memory_(hyper_.memory_size),
      epsilon_(hyper_.epsilon_initial) {
  if (hyper_.shape.in_channels != 2)
    throw std::invalid_argument("DrlAgent: history encoding has exactly 2 channels");
}

void DrlAgent::reset_episode() {
  history_ = History(hyper_.shape.history);
  pending_state_.clear();
  pending_action_ = -1;
  previous_ = -1;
}

int DrlAgent::choose(const SensingRow& prev_busy_row, Rng& rng) {
  const auto idle = idle_action_set(prev_busy_row);
  pending_state_ = history_.encode(n_vrb_);
  pending_action_ =
      select_action(q_, pending_state_, idle, epsilon_, previous_, rng, saturation_);
  previous_ = pending_action_;
  return pending_action_;
}

double DrlAgent::learn(Feedback fb, const SensingRow& next_busy_row, Rng& rng) {
  if (pending_action_ < 0) throw std::logic_error("DrlAgent::learn without choose");
  history_.push({pending_action_, fb});
  Transition t;
  t.state = std::move(pending_state_);
  t.action = pending_action_;
  t.reward = reward(fb);
  t.next_state = history_.encode(n_vrb_);
  if (hyper_.masked_target) t.next_idle = idle_action_set(next_busy_row);
  memory_.push(std::move(t));
  pending_action_ = -1;

  const double loss = train_step(q_, memory_, hyper_, rng);
  ++periods_;
  if (periods_ % static_cast<std::size_t>(hyper_.decay_interval_periods) == 0)
    epsilon_ = std::max(hyper_.epsilon_min, epsilon_ * hyper_.epsilon_decay);
  return loss;
}

StepRecord episode_step(World& world, Policy& policy, Rng& world_rng, Rng& agent_rng) {
  const int action = policy.choose(world.pl_sensing(), agent_rng);
  StepRecord rec{world.step(action, world_rng), 0.0};
  rec.loss = policy.learn(feedback(rec.outcome), world.pl_sensing(), agent_rng);
  return rec;
}

}  // namespace platoon
