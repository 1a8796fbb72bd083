// Copyright 2026 The Collage Inference Authors.
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

#include "collage/gateway.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "collage/backend.hpp"
#include "collage/text.hpp"

namespace collage::gateway {

std::string make_image_ref(const std::string& name, ClassId truth) {
  return name + "#" + std::to_string(truth);
}

std::optional<ClassId> ref_truth(std::string_view ref) {
  const auto hash = ref.rfind('#');
  if (hash == std::string_view::npos) return std::nullopt;
  const auto v = parse_int(ref.substr(hash + 1));
  if (!v || *v < 0 || *v > INT32_MAX) return std::nullopt;
  return static_cast<ClassId>(*v);
}

// ---------------------------------------------------------------------------
// StubWorker

namespace {

// Pending responses for one connection, released by a single writer thread.
struct Outbox {
  using Clock = std::chrono::steady_clock;
  struct Item {
    Clock::time_point due;
    std::uint64_t seq;
    std::string line;
    bool operator>(const Item& o) const { return due != o.due ? due > o.due : seq > o.seq; }
  };

  std::mutex mu;
  std::condition_variable cv;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::uint64_t seq = 0;
  bool closed = false;

  void push(Clock::time_point due, std::string line) {
    {
      std::lock_guard lock(mu);
      heap.push(Item{due, seq++, std::move(line)});
    }
    cv.notify_one();
  }

  void close() {
    {
      std::lock_guard lock(mu);
      closed = true;
    }
    cv.notify_all();
  }

  void drain_into(net::LineSocket& sock) {
    std::unique_lock lock(mu);
    for (;;) {
      if (closed) return;
      if (heap.empty()) {
        cv.wait(lock);
        continue;
      }
      const auto due = heap.top().due;
      if (Clock::now() < due) {
        cv.wait_until(lock, due);
        continue;
      }
      std::string line = heap.top().line;
      heap.pop();
      lock.unlock();
      try {
        sock.write_line(line);
      } catch (const std::system_error&) {
        return;
      }
      lock.lock();
    }
  }
};

}  // namespace

StubWorker::StubWorker(StubOptions options, std::uint16_t port)
    : options_(std::move(options)), listener_(port) {
  acceptor_ = std::jthread([this] { accept_loop(); });
}

StubWorker::~StubWorker() { stop(); }

void StubWorker::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  {
    std::lock_guard lock(mu_);
    for (auto& c : conns_) c->shutdown();
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::jthread> threads;
  {
    std::lock_guard lock(mu_);
    threads.swap(threads_);
  }
  threads.clear();
}

void StubWorker::wait() {
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::jthread> threads;
  {
    std::lock_guard lock(mu_);
    threads.swap(threads_);
  }
  threads.clear();
}

void StubWorker::accept_loop() {
  while (!stopping_) {
    auto sock = listener_.accept();
    if (!sock) break;
    auto conn = std::make_shared<net::LineSocket>(std::move(*sock));
    std::lock_guard lock(mu_);
    if (stopping_) {
      conn->shutdown();
      break;
    }
    conns_.push_back(conn);
    threads_.emplace_back([this, conn] { serve(conn); });
  }
}

void StubWorker::serve(std::shared_ptr<net::LineSocket> conn) {
  Outbox outbox;
  std::jthread writer([&] { outbox.drain_into(*conn); });

  while (auto line = conn->read_line()) {
    std::string reply;
    try {
      reply = answer(wire::parse(*line));
    } catch (const wire::ProtocolError& e) {
      outbox.push(Outbox::Clock::now(), wire::frame(wire::ErrorMessage{0, e.what()}));
      continue;
    }
    const std::uint64_t index = requests_seen_.fetch_add(1);
    double delay = 0.0;
    if (!options_.delays_s.empty()) delay = options_.delays_s[index % options_.delays_s.size()];
    const auto due = Outbox::Clock::now() +
                     std::chrono::duration_cast<Outbox::Clock::duration>(
                         std::chrono::duration<double>(delay));
    outbox.push(due, std::move(reply));
  }
  outbox.close();
}

std::string StubWorker::answer(const wire::Message& request) const {
  using Mode = StubOptions::Mode;
  if (const auto* req = std::get_if<wire::ClassifyRequest>(&request)) {
    if (options_.mode != Mode::kScnn) {
      return wire::frame(wire::ErrorMessage{req->id, "collage worker cannot classify single images"});
    }
    const auto truth = ref_truth(req->image_ref);
    if (!truth || *truth >= options_.class_count) return wire::frame(wire::ClassifyResponse{req->id, 0});
    Rng rng = Rng::stream(options_.seed, StreamRole::kWorker, req->id);
    return wire::frame(wire::ClassifyResponse{
        req->id, sample_class(*truth, options_.accuracy, options_.class_count, rng)});
  }
  if (const auto* req = std::get_if<wire::CollageRequest>(&request)) {
    if (options_.mode != Mode::kCollage) {
      return wire::frame(wire::ErrorMessage{req->id, "s-cnn worker cannot classify collages"});
    }
    const auto n = req->image_refs.size();
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (n == 0 || static_cast<std::size_t>(k) * k != n) {
      return wire::frame(wire::ErrorMessage{req->id, "collage size is not a perfect square"});
    }
    const CollageLayout layout(k);
    Rng rng = Rng::stream(options_.seed, StreamRole::kCollage, req->id);
    wire::CollageResponse resp{req->id, {}};
    for (std::size_t i = 0; i < n; ++i) {
      if (options_.empty_cells.contains(i) || !rng.bernoulli(options_.p_detect)) continue;
      const auto truth = ref_truth(req->image_refs[i]).value_or(0);
      const ClassId cls = truth < options_.class_count
                              ? sample_class(truth, options_.accuracy, options_.class_count, rng)
                              : 0;
      const double conf = rng.uniform(CollageModel::kConfidenceFloor, 1.0);
      resp.detections.push_back(Detection{layout.cell(i), cls, conf});
    }
    return wire::frame(resp);
  }
  return wire::frame(wire::ErrorMessage{request_id(request), "unexpected message kind"});
}

// ---------------------------------------------------------------------------
// Coordinator

Coordinator::Coordinator(GatewayConfig cfg, std::vector<net::Endpoint> workers,
                         net::Endpoint collage, std::vector<net::Endpoint> replicas)
    : cfg_(cfg), layout_(cfg.k), n_(workers.size()), replica_count_(replicas.size()) {
  if (n_ != layout_.n()) {
    throw std::invalid_argument("gateway needs exactly k^2 = " + std::to_string(layout_.n()) +
                                " workers, got " + std::to_string(n_));
  }
  if (replicas.empty()) throw std::invalid_argument("gateway needs at least one replica endpoint");
  for (const auto& ep : workers) conns_.push_back(std::make_unique<net::LineSocket>(net::LineSocket::connect(ep)));
  conns_.push_back(std::make_unique<net::LineSocket>(net::LineSocket::connect(collage)));
  for (const auto& ep : replicas) conns_.push_back(std::make_unique<net::LineSocket>(net::LineSocket::connect(ep)));
  for (std::size_t c = 0; c < conns_.size(); ++c) readers_.emplace_back([this, c] { reader(c); });
}

Coordinator::~Coordinator() {
  for (auto& c : conns_) c->shutdown();
  readers_.clear();
}

void Coordinator::reader(std::size_t conn) {
  while (auto line = conns_[conn]->read_line()) {
    Event ev{conn, wire::ErrorMessage{0, "unparseable"}, Clock::now()};
    try {
      ev.message = wire::parse(*line);
    } catch (const wire::ProtocolError&) {
      continue;  // a reply we cannot attribute to any request
    }
    {
      std::lock_guard lock(mu_);
      events_.push_back(std::move(ev));
    }
    cv_.notify_one();
  }
}

std::optional<Coordinator::Event> Coordinator::next_event(Clock::time_point deadline) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_until(lock, deadline, [&] { return !events_.empty(); })) return std::nullopt;
  Event ev = std::move(events_.front());
  events_.pop_front();
  return ev;
}

LiveBatchResult Coordinator::run_batch(const std::vector<std::string>& image_refs) {
  if (image_refs.size() != n_) throw std::invalid_argument("batch size must equal k^2");

  const std::uint64_t base = next_id_;
  next_id_ += 2 * n_ + 1;
  const std::uint64_t collage_id = base + n_;
  const std::uint64_t replica_base = base + n_ + 1;
  auto seconds_since = [](Clock::time_point t0, Clock::time_point t) {
    return std::chrono::duration<double>(t - t0).count();
  };

  LiveBatchResult out;
  out.scnn_arrival_s.resize(n_);
  std::vector<ClassId> scnn_class(n_, 0);

  const auto t0 = Clock::now();
  for (std::size_t i = 0; i < n_; ++i) {
    conns_[i]->write_line(wire::frame(wire::ClassifyRequest{base + i, image_refs[i]}));
  }
  conns_[n_]->write_line(wire::frame(wire::CollageRequest{collage_id, image_refs}));

  auto take_scnn = [&](const Event& ev, std::uint64_t id) -> std::optional<std::size_t> {
    if (id < base || id >= base + n_) return std::nullopt;
    const auto i = static_cast<std::size_t>(id - base);
    if (ev.conn != i) return std::nullopt;
    return i;
  };

  // Phase 1: s-cnn arrivals until the decoded collage result or its deadline.
  const auto collage_deadline =
      t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg_.collage_timeout_s));
  double decision_cutoff = cfg_.collage_timeout_s;
  std::vector<Detection> collage_dets;
  while (true) {
    auto ev = next_event(collage_deadline);
    if (!ev) break;
    const std::uint64_t id = wire::request_id(ev->message);
    if (const auto* r = std::get_if<wire::ClassifyResponse>(&ev->message)) {
      if (const auto i = take_scnn(*ev, id); i && !out.scnn_arrival_s[*i]) {
        out.scnn_arrival_s[*i] = seconds_since(t0, ev->at);
        scnn_class[*i] = r->class_id;
      }
    } else if (id == collage_id && ev->conn == n_) {
      if (const auto* c = std::get_if<wire::CollageResponse>(&ev->message)) {
        collage_dets = c->detections;
        out.cells = decode(collage_dets, layout_, cfg_.threshold);
        out.collage_arrival_s = seconds_since(t0, Clock::now());
      } else {
        decision_cutoff = seconds_since(t0, ev->at);  // collage worker failed
      }
      break;
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  const CollageArrival arrival{out.collage_arrival_s.value_or(inf),
                               out.collage_arrival_s ? cfg_.collage_timeout_s : decision_cutoff};
  out.collage_in_time = arrival.in_time();
  if (out.cells.empty()) out.cells.resize(n_);

  std::vector<double> arrived(n_, inf);
  for (std::size_t i = 0; i < n_; ++i) {
    if (out.scnn_arrival_s[i]) arrived[i] = *out.scnn_arrival_s[i];
  }
  out.inputs = recovery_inputs(arrived, scnn_class, arrival, out.cells);
  out.recovery = recover(out.inputs.scnn, out.inputs.cells);

  out.requests.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    if (out.inputs.scnn[i]) out.requests[i] = {scnn_class[i], Source::kScnn, arrived[i]};
  }
  for (std::size_t i : out.recovery.used_collage) {
    out.requests[i] = {out.recovery.final_predictions[i], Source::kCollage, arrival.collage_done_s};
  }

  // Phase 2: replicate the rest; the first of original and replica wins.
  std::set<std::size_t> pending(out.recovery.needs_replication.begin(),
                                out.recovery.needs_replication.end());
  for (std::size_t i : pending) {
    conns_[n_ + 1 + i % replica_count_]->write_line(
        wire::frame(wire::ClassifyRequest{replica_base + i, image_refs[i]}));
  }
  const auto give_up =
      t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg_.give_up_s));
  while (!pending.empty()) {
    auto ev = next_event(give_up);
    if (!ev) break;
    const auto* r = std::get_if<wire::ClassifyResponse>(&ev->message);
    if (!r) continue;
    const std::uint64_t id = r->id;
    std::optional<std::size_t> i;
    Source source = Source::kScnn;
    if (const auto orig = take_scnn(*ev, id)) {
      i = orig;
    } else if (id >= replica_base && id < replica_base + n_ && ev->conn > n_) {
      i = static_cast<std::size_t>(id - replica_base);
      source = Source::kReplica;
    }
    if (!i || !pending.contains(*i)) continue;
    pending.erase(*i);
    out.requests[*i] = {r->class_id, source, seconds_since(t0, ev->at)};
  }

  for (const auto& r : out.requests) out.batch_latency_s = std::max(out.batch_latency_s, r.completion_s);
  return out;
}

}  // namespace collage::gateway
