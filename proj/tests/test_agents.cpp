#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "platoon/agents.hpp"

using namespace platoon;

namespace {

// Network whose output is the head bias for every input.
QNetwork constant_net(const std::vector<double>& q) {
  QNetShape s;
  s.actions = static_cast<int>(q.size());
  Rng rng(0);
  QNetwork net(s, std::vector<double>(QNetwork(s, rng).params().size(), 0.0));
  auto p = net.params();
  for (std::size_t a = 0; a < q.size(); ++a) p[net.layout().b5 + a] = q[a];
  return net;
}

SensingRow busy_except(int n, std::initializer_list<int> idle) {
  SensingRow r(n, 1);
  for (int m : idle) r[m] = 0;
  return r;
}

double fresh_td_error(const QNetwork& q, const Transition& t, double gamma) {
  const double v = td_target(t.reward, t.next_state, q, gamma);
  const double e = v - q.forward(t.state)[t.action];
  return e * e;
}

}  // namespace

TEST_SUITE("agents") {

TEST_CASE("idle action set") {
  CHECK(idle_action_set(SensingRow(200, 0)).size() == 200);
  CHECK(idle_action_set(SensingRow(200, 1)).empty());
  CHECK(idle_action_set(busy_except(200, {3, 17, 42})) == std::vector<int>{3, 17, 42});
}

TEST_CASE("random selection") {
  Rng rng(1);
  std::size_t sat = 0;
  const std::vector<int> single{7};
  CHECK(random_select(single, -1, rng, sat) == 7);

  const std::vector<int> four{1, 2, 3, 4};
  std::map<int, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[random_select(four, -1, rng, sat)];
  CHECK(counts.size() == 4);
  for (auto [a, c] : counts) CHECK(std::abs(c / double(draws) - 0.25) < 0.01);

  Rng r1(5), r2(5);
  for (int i = 0; i < 50; ++i) CHECK(random_select(four, -1, r1, sat) == random_select(four, -1, r2, sat));

  CHECK(sat == 0);
  CHECK(random_select({}, 9, rng, sat) == 9);
  CHECK(random_select({}, -1, rng, sat) == 0);
  CHECK(sat == 2);
}

TEST_CASE("history encoding") {
  History h(16);
  for (int i = 0; i < 16; ++i) h.push({0, Feedback::nack});
  CHECK(h.encode(200) == std::vector<double>(32, 0.0));

  History one(16);
  one.push({100, Feedback::ack});
  const auto x = one.encode(200);
  REQUIRE(x.size() == 32);
  for (int i = 0; i < 30; ++i) CHECK(x[i] == 0.0);
  CHECK(x[30] == 0.5);
  CHECK(x[31] == 1.0);

  History a(4), b(4);
  for (int i = 0; i < 4; ++i) {
    a.push({i, Feedback::ack});
    b.push({i + 1, Feedback::ack});
    CHECK(a.size() <= 4);
  }
  for (int i = 0; i < 40; ++i) a.push({i % 200, Feedback::ack});
  CHECK(a.size() == 4);
  CHECK(a.full());
  CHECK(a.encode(200) != b.encode(200));
  CHECK(a.items().back().action == 39);
}

TEST_CASE("reward and the all-ACK discounted return") {
  CHECK(reward(Feedback::ack) == 1.0);
  CHECK(reward(Feedback::nack) == 0.0);
  double g = 0, w = 1;
  for (int k = 0; k < 2000; ++k, w *= 0.9) g += w * reward(Feedback::ack);
  CHECK(g == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("action selection: masking, epsilon extremes, ties") {
  std::vector<double> q(200, 0.0);
  q[12] = 3.0;
  QNetwork net = constant_net(q);
  const std::vector<double> s(32, 0.0);
  Rng rng(2);
  std::size_t sat = 0;
  std::vector<int> all(200);
  for (int i = 0; i < 200; ++i) all[i] = i;
  CHECK(select_action(net, s, all, 0.0, -1, rng, sat) == 12);

  q[3] = 10.0;  // busy
  q[7] = 5.0;
  net = constant_net(q);
  const auto idle = idle_action_set(busy_except(200, {7, 12, 150}));
  CHECK(select_action(net, s, idle, 0.0, -1, rng, sat) == 7);

  const std::vector<double> ties{1.0, 2.0, 2.0, 2.0};
  const std::vector<int> allowed{3, 2, 1};
  CHECK(masked_argmax(ties, allowed) == 1);

  // epsilon = 1 is the random baseline.
  std::map<int, int> counts;
  for (int i = 0; i < 30000; ++i) ++counts[select_action(net, s, idle, 1.0, -1, rng, sat)];
  CHECK(counts.size() == 3);
  for (auto [a, c] : counts) CHECK(std::abs(c / 30000.0 - 1.0 / 3) < 0.015);

  CHECK(select_action(net, s, {}, 0.0, 42, rng, sat) == 42);
}

TEST_CASE("masking soundness on a random network") {
  QNetShape shape;
  Rng rng(4);
  QNetwork net(shape, rng);
  std::size_t sat = 0;
  for (int trial = 0; trial < 300; ++trial) {
    SensingRow row(200);
    for (auto& v : row) v = uniform01(rng) < 0.7;
    const auto idle = idle_action_set(row);
    std::vector<double> s(32);
    for (auto& v : s) v = uniform01(rng);
    const int a = select_action(net, s, idle, 0.3, -1, rng, sat);
    if (!idle.empty()) CHECK(row[a] == 0);
  }
}

TEST_CASE("TD target") {
  std::vector<double> q(200, 0.0);
  q[50] = 2.0;
  q[10] = 1.5;
  const std::vector<double> s(32, 0.0);
  CHECK(td_target(1.0, s, constant_net(q), 0.0) == 1.0);
  CHECK(td_target(1.0, s, constant_net(q), 0.9) == doctest::Approx(2.8));
  std::swap(q[10], q[11]);
  q[0] = -4.0;
  CHECK(td_target(1.0, s, constant_net(q), 0.9) == doctest::Approx(2.8));
  const std::vector<int> idle{10, 11, 12};
  CHECK(td_target(0.0, s, constant_net(q), 0.9, idle) == doctest::Approx(0.9 * 1.5));
}

TEST_CASE("replay memory is a bounded FIFO with uniform sampling") {
  ReplayMemory m(3);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.action = i;
    m.push(t);
    CHECK(m.size() <= 3);
  }
  CHECK(m.size() == 3);
  CHECK(m.at(0).action == 2);
  CHECK(m.at(2).action == 4);
  Rng rng(5);
  std::map<int, int> counts;
  for (int i = 0; i < 30000; ++i) ++counts[m.sample(rng).action];
  for (int a = 2; a <= 4; ++a) CHECK(std::abs(counts[a] / 30000.0 - 1.0 / 3) < 0.015);
  CHECK_THROWS(ReplayMemory(0));

  ReplayMemory big(1000);
  for (int i = 0; i < 2500; ++i) {
    Transition t;
    t.action = i;
    big.push(t);
  }
  CHECK(big.size() == 1000);
  CHECK(big.at(0).action == 1500);
}

TEST_CASE("training: zero rate is a no-op, non-finite loss aborts") {
  DrlHyperParams h;
  h.learning_rate = 0.0;
  Rng rng(6);
  QNetwork net(h.shape, rng);
  const std::vector<double> before(net.params().begin(), net.params().end());
  ReplayMemory m(10);
  Transition t{std::vector<double>(32, 0.1), 4, 1.0, std::vector<double>(32, 0.2), {}};
  m.push(t);
  train_step(net, m, h, rng);
  CHECK(std::equal(before.begin(), before.end(), net.params().begin()));

  net.params()[net.layout().b5 + 4] = std::nan("");
  h.learning_rate = 0.01;
  CHECK_THROWS_AS(train_step(net, m, h, rng), TrainingError);
  CHECK_THROWS_AS(train_step(net, ReplayMemory(1), h, rng), TrainingError);
}

TEST_CASE("single-transition overfit reaches TD error < 1e-3 within 500 steps") {
  DrlHyperParams h;
  Rng rng(7);
  QNetwork net(h.shape, rng);
  std::vector<double> s(32), s2(32);
  for (auto& v : s) v = uniform01(rng);
  for (auto& v : s2) v = uniform01(rng);
  ReplayMemory m(1);
  m.push({s, 17, 1.0, s2, {}});
  int steps = 0;
  double err = fresh_td_error(net, m.at(0), h.gamma);
  CHECK(err > 1e-3);
  while (steps < 500 && err >= 1e-3) {
    train_step(net, m, h, rng);
    ++steps;
    err = fresh_td_error(net, m.at(0), h.gamma);
  }
  MESSAGE("overfit steps: " << steps << ", squared TD error " << err);
  CHECK(err < 1e-3);
}

TEST_CASE("one-state two-action MDP converges to the closed-form Q") {
  // Action 0 pays 1, action 1 pays 0, the state never changes.
  // Q*(0) = 1 / (1 - g), Q*(1) = g / (1 - g).
  DrlHyperParams h;
  Rng rng(8);
  QNetwork net(h.shape, rng);
  const std::vector<double> s(32, 0.5);
  ReplayMemory m(2);
  m.push({s, 0, 1.0, s, {}});
  m.push({s, 1, 0.0, s, {}});
  for (int i = 0; i < 20000; ++i) train_step(net, m, h, rng);
  const auto q = net.forward(s);
  const double q0 = 1 / (1 - h.gamma), q1 = h.gamma / (1 - h.gamma);
  MESSAGE("Q = (" << q[0] << ", " << q[1] << "), closed form (" << q0 << ", " << q1 << ")");
  CHECK(std::abs(q[0] - q0) / q0 < 0.05);
  CHECK(std::abs(q[1] - q1) / q1 < 0.05);
}

TEST_CASE("hyper-parameter validation") {
  DrlHyperParams h;
  CHECK_NOTHROW(h.validate());
  h.gamma = 0.0;
  CHECK_THROWS(h.validate());
  h = DrlHyperParams{};
  h.epsilon_initial = 1.5;
  CHECK_THROWS(h.validate());
  h = DrlHyperParams{};
  h.batch_size = 0;
  CHECK_THROWS(h.validate());
  h = DrlHyperParams{};
  h.decay_interval_periods = 0;
  CHECK_THROWS(h.validate());
}

TEST_CASE("agent in a world: epsilon schedule, masking, determinism") {
  ScenarioConfig c;
  c.density_rho = 60;
  DrlHyperParams h;
  h.epsilon_min = 0.1;

  auto run = [&](std::uint64_t seed, std::vector<int>& actions, std::vector<double>& eps) {
    Rng wr(seed), ar(seed + 1);
    World w = init_world(place_vehicles(c, wr), c, wr);
    DrlAgent agent(w.n_vrb(), h, ar);
    CHECK_THROWS_AS(agent.learn(Feedback::ack, w.pl_sensing(), ar), std::logic_error);
    for (int n = 0; n < 2100; ++n) {
      const SensingRow prev = w.pl_sensing();
      const auto rec = episode_step(w, agent, wr, ar);
      if (!idle_action_set(prev).empty()) CHECK(prev[rec.outcome.pl_vrb] == 0);
      CHECK(agent.history().size() <= 16);
      CHECK(agent.memory().size() <= 1000);
      CHECK(std::isfinite(rec.loss));
      actions.push_back(rec.outcome.pl_vrb);
      eps.push_back(agent.epsilon());
    }
  };
  std::vector<int> a1, a2;
  std::vector<double> e1, e2;
  run(9, a1, e1);
  run(9, a2, e2);
  CHECK(a1 == a2);
  for (std::size_t i = 1; i < e1.size(); ++i) CHECK(e1[i] <= e1[i - 1]);
  CHECK(e1[498] == 1.0);
  CHECK(e1[499] == 0.5);  // after the 500th update
  CHECK(e1[999] == 0.25);
  CHECK(e1[1499] == 0.125);
  CHECK(e1[1999] == 0.1);  // clamped at the minimum
}

TEST_CASE("episode reset keeps weights and the epsilon schedule") {
  DrlHyperParams h;
  Rng rng(10);
  DrlAgent agent(200, h, rng);
  const SensingRow idle(200, 0);
  for (int i = 0; i < 600; ++i) {
    agent.choose(idle, rng);
    agent.learn(Feedback::ack, idle, rng);
  }
  const std::vector<double> w(agent.network().params().begin(), agent.network().params().end());
  const double eps = agent.epsilon();
  agent.reset_episode();
  CHECK(agent.history().size() == 0);
  CHECK(agent.epsilon() == eps);
  CHECK(std::equal(w.begin(), w.end(), agent.network().params().begin()));
}

}  // TEST_SUITE
