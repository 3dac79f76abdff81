#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <vector>

#include "detect/errors.hpp"

namespace detect {

constexpr double kForever = std::numeric_limits<double>::infinity();

/// Discrete-event clock. Events fire in due-time order; equal due times
/// fire in the order they were scheduled. Time never moves backward.
class VirtualClock {
 public:
  using Callback = std::function<void(double)>;

  double now() const { return now_; }
  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }

  double next_due() const {
    return queue_.empty() ? kForever : queue_.top().due;
  }

  void schedule_at(double due, Callback fn) {
    if (due < now_) throw InvalidInputError("cannot schedule in the past");
    queue_.push(Pending{due, next_seq_++, std::move(fn)});
  }

  /// Fires at start, start+period, ... for every instant strictly before
  /// `until`. Pass kForever for an open-ended schedule bounded only by
  /// run_until().
  void schedule_repeating(double start, double period, double until,
                          Callback fn) {
    if (!(period > 0.0)) throw InvalidInputError("period must be > 0");
    if (!(start < until)) return;
    auto shared = std::make_shared<Callback>(std::move(fn));
    schedule_at(start, [this, period, until, shared](double t) {
      fire_repeating(t, period, until, shared);
    });
  }

  /// Fires every event with due time <= t_end in order, then advances the
  /// clock to exactly t_end.
  void run_until(double t_end) {
    if (t_end < now_) throw InvalidInputError("time cannot move backward");
    while (!queue_.empty() && queue_.top().due <= t_end) {
      Pending ev = queue_.top();
      queue_.pop();
      now_ = ev.due;
      ev.fn(ev.due);
    }
    now_ = t_end;
  }

 private:
  struct Pending {
    double due;
    std::uint64_t seq;
    Callback fn;
    bool operator>(const Pending& o) const {
      if (due != o.due) return due > o.due;
      return seq > o.seq;
    }
  };

  void fire_repeating(double t, double period, double until,
                      const std::shared_ptr<Callback>& fn) {
    (*fn)(t);
    const double next = t + period;
    if (next < until)
      schedule_at(next, [this, period, until, fn](double t2) {
        fire_repeating(t2, period, until, fn);
      });
  }

  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
};

}  // namespace detect
