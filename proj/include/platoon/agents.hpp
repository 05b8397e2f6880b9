#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "platoon/qnet.hpp"
#include "platoon/rng.hpp"
#include "platoon/sps_sim.hpp"

namespace platoon {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Indices sensed idle (row value 0) in the previous period.
std::vector<int> idle_action_set(const SensingRow& busy_row);

/// Uniform pick from `idle`. An empty set repeats `previous` (or VRB 0 when
/// there is no previous choice) and bumps `saturation`.
int random_select(std::span<const int> idle, int previous, Rng& rng,
                  std::size_t& saturation);

struct ActionObservation {
  int action = 0;
  Feedback observation = Feedback::nack;
};

/// Rolling window of the leader's last M (action, feedback) tuples.
class History {
 public:
  explicit History(int length) : length_(length) {}

  void push(ActionObservation c) {
    items_.push_back(c);
    if (static_cast<int>(items_.size()) > length_) items_.pop_front();
  }
  int length() const { return length_; }
  std::size_t size() const { return items_.size(); }
  bool full() const { return static_cast<int>(items_.size()) == length_; }
  const std::deque<ActionObservation>& items() const { return items_; }

  /// Interleaved (action / n_vrb, ACK ? 1 : 0) per tuple, oldest first, 2M
  /// values. Missing oldest entries are zero.
  std::vector<double> encode(int n_vrb) const;

 private:
  int length_;
  std::deque<ActionObservation> items_;
};

inline double reward(Feedback o) { return o == Feedback::ack ? 1.0 : 0.0; }

/// Lowest-index argmax of q restricted to `allowed`.
int masked_argmax(std::span<const double> q, std::span<const int> allowed);

/// Epsilon-greedy over the idle set: uniform with probability epsilon,
/// otherwise the best Q value among idle VRBs. Empty idle sets fall back as
/// in random_select.
int select_action(const QNetwork& q, std::span<const double> state,
                  std::span<const int> idle, double epsilon, int previous, Rng& rng,
                  std::size_t& saturation);

/// r + gamma * max_a Q(s', a). When `next_idle` is non-empty the max runs
/// over those VRBs only.
double td_target(double r_next, std::span<const double> s_next, const QNetwork& q,
                 double gamma, std::span<const int> next_idle = {});

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  std::vector<int> next_idle;  // filled only when targets are masked
};

/// Fixed-capacity FIFO of transitions; uniform sampling with replacement.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const Transition& at(std::size_t i) const { return items_[i]; }  // 0 = oldest
  const Transition& sample(Rng& rng) const { return items_[uniform_index(rng, items_.size())]; }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

struct DrlHyperParams {
  double learning_rate = 0.01;
  double gamma = 0.9;
  double epsilon_initial = 1.0;
  double epsilon_min = 0.0;
  double epsilon_decay = 0.5;
  int batch_size = 1;
  std::size_t memory_size = 1000;
  int decay_interval_periods = 500;
  bool masked_target = false;
  // Rescales the batch gradient to at most this L2 norm; 0 disables.
  double grad_clip_norm = 30.0;
  QNetShape shape;  // shape.actions is overwritten with N_r by the agent

  void validate() const;
};

/// One SGD step on the squared TD error of a sampled batch. Targets are
/// computed before the update and held fixed. Returns the loss on the same
/// batch after the update; throws TrainingError if it is not finite.
double train_step(QNetwork& q, const ReplayMemory& memory, const DrlHyperParams& hyper,
                  Rng& rng);

// Same update on an explicit batch (used by train_step and by tests).
double train_on(QNetwork& q, std::span<const Transition* const> batch,
                const DrlHyperParams& hyper);

/// Leader VRB policy driven once per period.
class Policy {
 public:
  virtual ~Policy() = default;
  // Picks this period's VRB from the previous period's sensing.
  virtual int choose(const SensingRow& prev_busy_row, Rng& rng) = 0;
  // Receives feedback for the last choice plus the new sensing row.
  // Returns the training loss, or NaN when nothing was trained.
  virtual double learn(Feedback fb, const SensingRow& next_busy_row, Rng& rng) = 0;
  virtual std::size_t saturation_events() const = 0;
};

class RandomAgent final : public Policy {
 public:
  int choose(const SensingRow& prev_busy_row, Rng& rng) override;
  double learn(Feedback, const SensingRow&, Rng&) override;
  std::size_t saturation_events() const override { return saturation_; }

 private:
  int previous_ = -1;
  std::size_t saturation_ = 0;
};

class DrlAgent final : public Policy {
 public:
  DrlAgent(int n_vrb, const DrlHyperParams& hyper, Rng& rng);

  int choose(const SensingRow& prev_busy_row, Rng& rng) override;
  double learn(Feedback fb, const SensingRow& next_busy_row, Rng& rng) override;
  std::size_t saturation_events() const override { return saturation_; }

  double epsilon() const { return epsilon_; }
  const QNetwork& network() const { return q_; }
  const History& history() const { return history_; }
  const ReplayMemory& memory() const { return memory_; }
  const DrlHyperParams& hyper() const { return hyper_; }
  std::size_t periods() const { return periods_; }

  // Start a new run in a new world. Weights, replay memory and the epsilon
  // schedule carry over; the history and the pending choice do not.
  void reset_episode();

 private:
  int n_vrb_;
  DrlHyperParams hyper_;
  QNetwork q_;
  History history_;
  ReplayMemory memory_;
  double epsilon_;
  std::vector<double> pending_state_;
  int pending_action_ = -1;
  int previous_ = -1;
  std::size_t periods_ = 0;
  std::size_t saturation_ = 0;
};

struct StepRecord {
  PeriodOutcome outcome;
  double loss;
};

/// One transmission period: policy picks from last period's sensing, the
/// world transmits, feedback is returned and the policy learns from it.
StepRecord episode_step(World& world, Policy& policy, Rng& world_rng, Rng& agent_rng);

}  // namespace platoon
