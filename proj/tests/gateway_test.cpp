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

#include <doctest.h>

#include <chrono>
#include <thread>

#include "collage/gateway.hpp"
#include "live_replay.hpp"
#include "process.hpp"

using namespace collage;
using namespace collage::gateway;

TEST_CASE("image references carry their truth label") {
  CHECK(make_image_ref("cat", 12) == "cat#12");
  CHECK(ref_truth("cat#12") == 12);
  CHECK(ref_truth("a#b#3") == 3);
  CHECK_FALSE(ref_truth("cat").has_value());
  CHECK_FALSE(ref_truth("cat#x").has_value());
  CHECK_FALSE(ref_truth("cat#-1").has_value());
}

TEST_CASE("stub answers") {
  StubOptions o;
  StubWorker scnn(o);
  CHECK(scnn.answer(wire::ClassifyRequest{4, "x#17"}) == "resp 4 17");
  CHECK(scnn.answer(wire::CollageRequest{5, {"a#1"}}).rfind("err 5 ", 0) == 0);

  o.accuracy = 0.0;
  StubWorker wrong(o);
  for (std::uint64_t id = 0; id < 50; ++id) {
    CHECK(wrong.answer(wire::ClassifyRequest{id, "x#17"}) != "resp " + std::to_string(id) + " 17");
  }

  StubOptions c;
  c.mode = StubOptions::Mode::kCollage;
  c.empty_cells = {1};
  StubWorker collage(c);
  std::vector<std::string> refs;
  for (int i = 0; i < 4; ++i) refs.push_back(make_image_ref("r", 10 + i));
  const auto reply = wire::parse(collage.answer(wire::CollageRequest{8, refs}));
  const auto& resp = std::get<wire::CollageResponse>(reply);
  CHECK(resp.id == 8);
  const CellPredictions cells = decode(resp.detections, CollageLayout(2));
  REQUIRE(cells.size() == 4);
  CHECK(cells[0]->class_id == 10);
  CHECK_FALSE(cells[1].has_value());
  CHECK(cells[2]->class_id == 12);
  CHECK(cells[3]->class_id == 13);
  CHECK(collage.answer(wire::CollageRequest{9, {"a", "b"}}).rfind("err 9 ", 0) == 0);
  CHECK(collage.answer(wire::CollageRequest{8, refs}) == collage.answer(wire::CollageRequest{8, refs}));
}

TEST_CASE("stub over a socket: pipelined requests come back by due time") {
  StubOptions o;
  o.delays_s = {0.3, 0.0};
  StubWorker stub(o);
  auto sock = net::LineSocket::connect(stub.endpoint());
  sock.write_line(wire::frame(wire::ClassifyRequest{1, "a#1"}));
  sock.write_line(wire::frame(wire::ClassifyRequest{2, "b#2"}));
  CHECK(sock.read_line() == "resp 2 2");
  CHECK(sock.read_line() == "resp 1 1");
  sock.write_line("nonsense");
  const auto err = sock.read_line();
  REQUIRE(err.has_value());
  CHECK(err->rfind("err 0 unknown_kind", 0) == 0);
  CHECK(stub.requests_seen() == 2);
}

TEST_CASE("coordinator rejects bad topologies") {
  StubWorker w(StubOptions{});
  std::vector<net::Endpoint> eight(8, w.endpoint());
  CHECK_THROWS_AS(Coordinator(GatewayConfig{}, eight, w.endpoint(), {w.endpoint()}),
                  std::invalid_argument);
  std::vector<net::Endpoint> nine(9, w.endpoint());
  CHECK_THROWS_AS(Coordinator(GatewayConfig{}, nine, w.endpoint(), {}), std::invalid_argument);
}

TEST_CASE("live run reproduces recover() on a replayed schedule") {
  const auto failures = testing::run_live_replay();
  for (const auto& f : failures) MESSAGE(f);
  CHECK(failures.empty());
}

TEST_CASE("failed collage worker falls back to replication right away") {
  std::vector<std::unique_ptr<StubWorker>> workers;
  std::vector<net::Endpoint> eps;
  for (int i = 0; i < 4; ++i) {
    StubOptions o;
    o.delays_s = {i == 1 ? 2.0 : 0.01};
    workers.push_back(std::make_unique<StubWorker>(o));
    eps.push_back(workers.back()->endpoint());
  }
  StubWorker not_a_collage_worker(StubOptions{});
  StubWorker replica(StubOptions{});
  GatewayConfig cfg;
  cfg.k = 2;
  cfg.collage_timeout_s = 1.5;
  Coordinator coord(cfg, eps, not_a_collage_worker.endpoint(), {replica.endpoint()});
  const auto out = coord.run_batch({"a#1", "b#2", "c#3", "d#4"});
  CHECK_FALSE(out.collage_in_time);
  CHECK(out.requests[1].source == Source::kReplica);
  CHECK(out.requests[1].prediction == 2);
  CHECK(out.batch_latency_s < 1.0);
}

TEST_CASE("stub worker executable speaks the protocol") {
  testing::Child child({STUB_WORKER_EXE, "--mode", "scnn", "--port", "0", "--delays-ms", "5"});
  const std::string banner = child.first_line();
  REQUIRE(banner.rfind("listening ", 0) == 0);
  const auto port = std::stoi(banner.substr(10));
  auto sock = net::LineSocket::connect({"127.0.0.1", static_cast<std::uint16_t>(port)});
  sock.write_line("req 41 dog#55");
  CHECK(sock.read_line() == "resp 41 55");
}
