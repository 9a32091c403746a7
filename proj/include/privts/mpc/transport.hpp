// Copyright 2026 The privts Authors
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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "privts/mpc/ring.hpp"

namespace privts::mpc {

// Protocol message.  On the wire (TCP realization) a message is framed as
//   4-byte big-endian length (= 12 + payload size), 8-byte big-endian tag,
//   4-byte big-endian round, payload bytes.
struct Message {
  std::uint64_t tag = 0;
  std::uint32_t round = 0;
  std::vector<std::uint8_t> payload;
};

// One party's endpoint of a fully connected mesh.  Messages are delivered
// in order per directed channel; protocol results must not depend on
// cross-channel interleaving.
class PartyTransport {
 public:
  virtual ~PartyTransport() = default;

  virtual int party_id() const = 0;
  virtual int num_parties() const = 0;

  virtual void send(int to, Message message) = 0;
  // Blocks for the next message on the (from -> this) channel and checks
  // its tag; a mismatch raises TransportError.
  virtual Message recv(int from, std::uint64_t expected_tag) = 0;

  std::uint64_t messages_sent() const { return messages_sent_; }
  std::uint64_t bytes_sent() const { return bytes_sent_; }

  // Rolling FNV-1a digest of every frame sent, for transcript-determinism
  // checks.
  std::uint64_t transcript_digest() const { return transcript_; }

 protected:
  void note_send(int to, const Message& m) {
    ++messages_sent_;
    bytes_sent_ += m.payload.size() + 12;
    auto mix = [&](std::uint64_t v) {
      transcript_ ^= v;
      transcript_ *= 0x100000001b3ULL;
    };
    mix(static_cast<std::uint64_t>(to));
    mix(m.tag);
    mix(m.round);
    for (std::uint8_t b : m.payload) mix(b);
  }

 private:
  std::uint64_t messages_sent_ = 0;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t transcript_ = 0xcbf29ce484222325ULL;
};

// In-process realization: one bounded queue per directed party pair.
class InProcMesh {
 public:
  explicit InProcMesh(int num_parties);
  ~InProcMesh();

  // One endpoint per party; endpoints stay valid while the mesh lives.
  std::vector<PartyTransport*> endpoints();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Loopback TCP realization with the framing documented on Message.  All
// parties run inside this process; party i listens on base_port + i and
// higher-numbered parties connect to lower-numbered listeners.
class TcpMesh {
 public:
  TcpMesh(int num_parties, std::uint16_t base_port);
  ~TcpMesh();

  std::vector<PartyTransport*> endpoints();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Payload helpers.
std::vector<std::uint8_t> pack_ring_vec(const RingVec& values);
RingVec unpack_ring_vec(const std::vector<std::uint8_t>& payload);

}  // namespace privts::mpc
