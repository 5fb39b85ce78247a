#pragma once

// WebSocket transport for the gateway (Boost.Beast).
//
// Three kinds of thread touch a server: the tick loop (sole owner of the
// Gateway and its simulation), the I/O thread running every connection, and
// whoever calls stop(). They only exchange strings: commands go into the
// Gateway inbox, frames and replies go into each connection's OutboundQueue.

#include "blimpswarm/gateway.hpp"

#include <atomic>
#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <string>

namespace blimpswarm::gateway {

/// Per-connection send queue. Frames beyond `frame_capacity` push out the
/// oldest queued frame; replies are never dropped.
class OutboundQueue {
  public:
    explicit OutboundQueue(std::size_t frame_capacity = 8);

    void push_frame(std::string text);
    void push_reply(std::string text);
    [[nodiscard]] std::optional<std::string> pop();

    [[nodiscard]] std::size_t size() const { return items_.size(); }
    [[nodiscard]] std::size_t frames() const { return frames_; }
    [[nodiscard]] std::size_t dropped() const { return dropped_; }

  private:
    struct Item {
        std::string text;
        bool frame{false};
    };
    std::size_t capacity_;
    std::deque<Item> items_;
    std::size_t frames_{0};
    std::size_t dropped_{0};
};

struct ServerOptions {
    std::string address{"127.0.0.1"};
    unsigned short port{8765}; // 0 picks a free port
    double frame_rate{20.0};   // [Hz], wall clock
    std::size_t frame_queue{8};
    bool exit_when_finished{false};
};

class TelemetryServer {
  public:
    TelemetryServer(Gateway &gateway, ServerOptions options);
    ~TelemetryServer();

    TelemetryServer(const TelemetryServer &) = delete;
    TelemetryServer &operator=(const TelemetryServer &) = delete;

    /// Port actually bound (useful with port 0).
    [[nodiscard]] unsigned short port() const;
    /// Runs the tick loop on the calling thread until stop() or, with
    /// exit_when_finished, until the run ends and a final frame went out.
    void run();
    void stop();
    [[nodiscard]] std::size_t connections() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace blimpswarm::gateway
