// Copyright 2026 The groundmap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "groundmap/errors.hpp"

namespace groundmap {

struct EnvelopeHeader {
  std::string topic;
  std::string publisher;
  std::uint64_t seq = 0;         // per (topic, publisher), starts at 1
  std::uint64_t global_seq = 0;  // bus-wide publish order
  double stamp = 0.0;            // simulation clock
};

template <typename Payload>
struct Envelope {
  EnvelopeHeader header;
  std::shared_ptr<const Payload> payload;

  template <typename T>
  bool holds() const {
    return payload && std::holds_alternative<T>(*payload);
  }
  template <typename T>
  const T& get() const {
    return std::get<T>(*payload);
  }
};

struct TopicStats {
  std::uint64_t published = 0;
  std::uint64_t delivered = 0;  // popped by a subscriber
  std::uint64_t dropped = 0;    // evicted on overflow, or published with no subscriber
  std::size_t subscribers = 0;
  std::size_t queued = 0;
};

/// In-process typed publish/subscribe bus.
///
/// Every topic carries exactly one alternative of `Payload`. Each
/// subscription owns a bounded FIFO fed in global publish order; when full the
/// oldest buffered envelope is evicted. Latched topics replay their most
/// recent envelope to new subscribers. All members are thread-safe.
template <typename Payload>
class Bus {
 public:
  using EnvelopeT = Envelope<Payload>;
  using Recorder = std::function<void(const EnvelopeT&)>;

  class Subscription;

  Bus() : state_(std::make_shared<State>()) {}

  template <typename T>
  void register_topic(const std::string& name, bool latched = false) {
    register_topic_index(name, variant_index<T>(), latched);
  }

  void register_topic_index(const std::string& name, std::size_t type_index, bool latched) {
    std::lock_guard lock(state_->mutex);
    auto [it, inserted] = state_->topics.try_emplace(name);
    if (!inserted) {
      throw Error(ErrorCode::InvalidInput, "topic already registered: " + name);
    }
    it->second.type_index = type_index;
    it->second.latched = latched;
    it->second.counters = std::make_shared<Counters>();
  }

  bool has_topic(std::string_view name) const {
    std::lock_guard lock(state_->mutex);
    return state_->topics.find(std::string(name)) != state_->topics.end();
  }

  std::vector<std::string> topics() const {
    std::lock_guard lock(state_->mutex);
    std::vector<std::string> out;
    for (const auto& [name, _] : state_->topics) {
      out.push_back(name);
    }
    return out;
  }

  template <typename T>
  EnvelopeHeader publish(std::string_view topic, std::string_view publisher, double stamp, T message) {
    return publish_payload(topic, publisher, stamp,
                           std::make_shared<const Payload>(std::in_place_type<T>, std::move(message)));
  }

  EnvelopeHeader publish_payload(std::string_view topic, std::string_view publisher, double stamp,
                                 std::shared_ptr<const Payload> payload) {
    std::lock_guard lock(state_->mutex);
    auto& entry = checked_topic(topic);
    if (entry.type_index != payload->index()) {
      throw Error(ErrorCode::TypeMismatch, "payload type does not match topic " + std::string(topic));
    }
    auto& pub = entry.publishers[std::string(publisher)];
    if (pub.seq > 0 && stamp < pub.last_stamp) {
      throw Error(ErrorCode::InvalidInput, "stamp moved backwards for publisher " +
                                               std::string(publisher) + " on " + std::string(topic));
    }
    EnvelopeT env;
    env.header = {std::string(topic), std::string(publisher), ++pub.seq, ++state_->global_seq, stamp};
    pub.last_stamp = stamp;
    env.payload = std::move(payload);
    deliver_locked(entry, env);
    return env.header;
  }

  /// Re-injects a recorded envelope, keeping its stamp and sequence numbers.
  void replay(const EnvelopeT& recorded) {
    std::lock_guard lock(state_->mutex);
    auto& entry = checked_topic(recorded.header.topic);
    if (entry.type_index != recorded.payload->index()) {
      throw Error(ErrorCode::TypeMismatch, "payload type does not match topic " + recorded.header.topic);
    }
    EnvelopeT env = recorded;
    env.header.global_seq = ++state_->global_seq;
    auto& pub = entry.publishers[env.header.publisher];
    pub.seq = env.header.seq;
    pub.last_stamp = env.header.stamp;
    deliver_locked(entry, env);
  }

  /// One queue fed by several topics, preserving global publish order across them.
  Subscription subscribe(const std::vector<std::string>& topic_names, std::size_t capacity) {
    if (capacity == 0) {
      throw Error(ErrorCode::InvalidInput, "subscription capacity must be > 0");
    }
    auto queue = std::make_shared<Queue>(capacity);
    std::lock_guard lock(state_->mutex);
    for (const auto& name : topic_names) {
      checked_topic(name);
    }
    for (const auto& name : topic_names) {
      auto& entry = state_->topics.at(name);
      queue->counters[name] = entry.counters;
      entry.subscribers.push_back(queue);
      if (entry.latched && entry.last) {
        queue->push(*entry.last, *entry.counters);
      }
    }
    return Subscription(state_, queue, topic_names);
  }

  Subscription subscribe(const std::string& topic, std::size_t capacity) {
    return subscribe(std::vector<std::string>{topic}, capacity);
  }

  void set_recorder(Recorder recorder) {
    std::lock_guard lock(state_->mutex);
    state_->recorder = std::move(recorder);
  }

  TopicStats stats(std::string_view topic) const {
    std::lock_guard lock(state_->mutex);
    auto it = state_->topics.find(std::string(topic));
    if (it == state_->topics.end()) {
      throw Error(ErrorCode::UnknownTopic, std::string(topic));
    }
    const auto& entry = it->second;
    TopicStats out;
    out.published = entry.counters->published.load();
    out.delivered = entry.counters->delivered.load();
    out.dropped = entry.counters->dropped.load();
    out.subscribers = entry.subscribers.size();
    for (const auto& q : entry.subscribers) {
      out.queued += q->count_for(it->first);
    }
    return out;
  }

  template <typename T>
  static constexpr std::size_t variant_index() {
    return index_of<T>(std::make_index_sequence<std::variant_size_v<Payload>>{});
  }

 private:
  struct Counters {
    std::atomic<std::uint64_t> published{0};
    std::atomic<std::uint64_t> delivered{0};
    std::atomic<std::uint64_t> dropped{0};
  };

  struct Queue {
    explicit Queue(std::size_t cap) : capacity(cap) {}

    void push(const EnvelopeT& env, Counters& topic_counters) {
      {
        std::lock_guard lock(mutex);
        if (closed) {
          topic_counters.dropped.fetch_add(1);
          return;
        }
        if (items.size() >= capacity) {
          const auto& oldest = items.front().header.topic;
          counters.at(oldest)->dropped.fetch_add(1);
          items.pop_front();
        }
        items.push_back(env);
      }
      cv.notify_one();
    }

    std::optional<EnvelopeT> pop() {
      std::lock_guard lock(mutex);
      return pop_locked();
    }

    std::optional<EnvelopeT> pop_locked() {
      if (items.empty()) {
        return std::nullopt;
      }
      EnvelopeT env = std::move(items.front());
      items.pop_front();
      counters.at(env.header.topic)->delivered.fetch_add(1);
      return env;
    }

    std::size_t count_for(const std::string& topic) {
      std::lock_guard lock(mutex);
      std::size_t n = 0;
      for (const auto& e : items) {
        n += e.header.topic == topic ? 1 : 0;
      }
      return n;
    }

    std::mutex mutex;
    std::condition_variable cv;
    std::deque<EnvelopeT> items;
    std::size_t capacity;
    bool closed = false;
    std::map<std::string, std::shared_ptr<Counters>> counters;
  };

  struct PublisherState {
    std::uint64_t seq = 0;
    double last_stamp = 0.0;
  };

  struct TopicEntry {
    std::size_t type_index = 0;
    bool latched = false;
    std::shared_ptr<Counters> counters;
    std::vector<std::shared_ptr<Queue>> subscribers;
    std::map<std::string, PublisherState> publishers;
    std::optional<EnvelopeT> last;
  };

  struct State {
    mutable std::mutex mutex;
    std::map<std::string, TopicEntry> topics;
    std::uint64_t global_seq = 0;
    Recorder recorder;
  };

 public:
  class Subscription {
   public:
    Subscription() = default;
    Subscription(const Subscription&) = delete;
    Subscription& operator=(const Subscription&) = delete;
    Subscription(Subscription&& other) noexcept = default;
    Subscription& operator=(Subscription&& other) noexcept {
      if (this != &other) {
        unsubscribe();
        state_ = std::move(other.state_);
        queue_ = std::move(other.queue_);
        topics_ = std::move(other.topics_);
      }
      return *this;
    }
    ~Subscription() { unsubscribe(); }

    std::optional<EnvelopeT> try_pop() { return queue_ ? queue_->pop() : std::nullopt; }

    template <typename Rep, typename Period>
    std::optional<EnvelopeT> pop_wait(std::chrono::duration<Rep, Period> timeout) {
      if (!queue_) {
        return std::nullopt;
      }
      std::unique_lock lock(queue_->mutex);
      queue_->cv.wait_for(lock, timeout, [&] { return !queue_->items.empty() || queue_->closed; });
      return queue_->pop_locked();
    }

    std::size_t size() const {
      if (!queue_) {
        return 0;
      }
      std::lock_guard lock(queue_->mutex);
      return queue_->items.size();
    }

    bool active() const { return queue_ != nullptr; }

    void unsubscribe() {
      if (!queue_) {
        return;
      }
      if (auto state = state_.lock()) {
        std::lock_guard lock(state->mutex);
        for (const auto& name : topics_) {
          auto it = state->topics.find(name);
          if (it == state->topics.end()) {
            continue;
          }
          auto& subs = it->second.subscribers;
          std::erase(subs, queue_);
        }
      }
      {
        std::lock_guard lock(queue_->mutex);
        queue_->closed = true;
        queue_->items.clear();
      }
      queue_->cv.notify_all();
      queue_.reset();
    }

   private:
    friend class Bus;
    Subscription(std::weak_ptr<State> state, std::shared_ptr<Queue> queue, std::vector<std::string> topics)
        : state_(std::move(state)), queue_(std::move(queue)), topics_(std::move(topics)) {}

    std::weak_ptr<State> state_;
    std::shared_ptr<Queue> queue_;
    std::vector<std::string> topics_;
  };

 private:
  template <typename T, std::size_t... I>
  static constexpr std::size_t index_of(std::index_sequence<I...>) {
    std::size_t result = std::variant_npos;
    ((std::is_same_v<T, std::variant_alternative_t<I, Payload>> ? (result = I) : 0), ...);
    return result;
  }

  TopicEntry& checked_topic(std::string_view name) {
    auto it = state_->topics.find(std::string(name));
    if (it == state_->topics.end()) {
      throw Error(ErrorCode::UnknownTopic, std::string(name));
    }
    return it->second;
  }

  void deliver_locked(TopicEntry& entry, const EnvelopeT& env) {
    entry.counters->published.fetch_add(1);
    if (entry.latched) {
      entry.last = env;
    }
    if (state_->recorder) {
      state_->recorder(env);
    }
    if (entry.subscribers.empty()) {
      entry.counters->dropped.fetch_add(1);
      return;
    }
    for (const auto& q : entry.subscribers) {
      q->push(env, *entry.counters);
    }
  }

  std::shared_ptr<State> state_;
};

}  // namespace groundmap
