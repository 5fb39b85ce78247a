#include "blimpswarm/ws_server.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <chrono>
#include <mutex>
#include <thread>
#include <vector>

namespace blimpswarm::gateway {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

OutboundQueue::OutboundQueue(std::size_t frame_capacity) : capacity_(std::max<std::size_t>(1, frame_capacity)) {}

void OutboundQueue::push_frame(std::string text) {
    if (frames_ >= capacity_) {
        auto oldest = std::find_if(items_.begin(), items_.end(), [](const Item &i) { return i.frame; });
        items_.erase(oldest);
        --frames_;
        ++dropped_;
    }
    items_.push_back(Item{std::move(text), true});
    ++frames_;
}

void OutboundQueue::push_reply(std::string text) { items_.push_back(Item{std::move(text), false}); }

std::optional<std::string> OutboundQueue::pop() {
    if (items_.empty()) return std::nullopt;
    Item item = std::move(items_.front());
    items_.pop_front();
    if (item.frame) --frames_;
    return std::move(item.text);
}

namespace {

class Session;

class Registry {
  public:
    void add(const std::shared_ptr<Session> &s) {
        std::lock_guard lock(mutex_);
        sessions_.push_back(s);
    }
    std::vector<std::shared_ptr<Session>> live() {
        std::lock_guard lock(mutex_);
        std::vector<std::shared_ptr<Session>> out;
        std::erase_if(sessions_, [&](const std::weak_ptr<Session> &w) {
            auto s = w.lock();
            if (!s) return true;
            out.push_back(std::move(s));
            return false;
        });
        return out;
    }
    std::size_t count() {
        std::lock_guard lock(mutex_);
        std::erase_if(sessions_, [](const std::weak_ptr<Session> &w) { return w.expired(); });
        return sessions_.size();
    }

  private:
    std::mutex mutex_;
    std::vector<std::weak_ptr<Session>> sessions_;
};

class Session : public std::enable_shared_from_this<Session> {
  public:
    Session(tcp::socket socket, Gateway &gateway, Registry &registry, std::size_t frame_queue)
        : ws_(std::move(socket)), gateway_(gateway), registry_(registry), queue_(frame_queue) {}

    void start() {
        net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->accept(); });
    }

    void send_frame(std::shared_ptr<const std::string> text) {
        net::post(ws_.get_executor(), [self = shared_from_this(), text] {
            self->queue_.push_frame(*text);
            self->flush();
        });
    }

    void close() {
        net::post(ws_.get_executor(), [self = shared_from_this()] {
            beast::error_code ec;
            beast::get_lowest_layer(self->ws_).socket().close(ec);
        });
    }

  private:
    void accept() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->open_ = true;
            self->registry_.add(self);
            self->read();
        });
    }

    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->open_ = false;
                return;
            }
            std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            std::weak_ptr<Session> weak = self;
            self->gateway_.submit(std::move(text), [weak](const std::string &reply) {
                if (auto s = weak.lock()) s->send_reply(reply);
            });
            self->read();
        });
    }

    void send_reply(const std::string &text) {
        net::post(ws_.get_executor(), [self = shared_from_this(), text] {
            self->queue_.push_reply(text);
            self->flush();
        });
    }

    void flush() {
        if (writing_ || !open_) return;
        auto next = queue_.pop();
        if (!next) return;
        current_ = std::move(*next);
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec) {
                self->open_ = false;
                return;
            }
            self->flush();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    Gateway &gateway_;
    Registry &registry_;
    OutboundQueue queue_;
    beast::flat_buffer buffer_;
    std::string current_;
    bool writing_{false};
    bool open_{false};
};

} // namespace

struct TelemetryServer::Impl {
    Impl(Gateway &gw, ServerOptions opt) : gateway(gw), options(std::move(opt)), acceptor(ioc) {
        if (!(options.frame_rate > 0.0)) throw InvalidArgument("server: frame_rate must be positive");
        const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
        acceptor.open(endpoint.protocol());
        acceptor.set_option(net::socket_base::reuse_address(true));
        acceptor.bind(endpoint);
        acceptor.listen(net::socket_base::max_listen_connections);
        do_accept();
        io_thread = std::thread([this] { ioc.run(); });
    }

    ~Impl() {
        ioc.stop();
        if (io_thread.joinable()) io_thread.join();
    }

    void do_accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<Session>(std::move(socket), gateway, registry, options.frame_queue)->start();
            do_accept();
        });
    }

    void broadcast(const TelemetryFrame &frame) {
        auto text = std::make_shared<const std::string>(to_json(frame));
        for (auto &s : registry.live()) s->send_frame(text);
    }

    Gateway &gateway;
    ServerOptions options;
    net::io_context ioc;
    tcp::acceptor acceptor;
    Registry registry;
    std::thread io_thread;
    std::atomic<bool> stopping{false};
};

TelemetryServer::TelemetryServer(Gateway &gateway, ServerOptions options)
    : impl_(std::make_unique<Impl>(gateway, std::move(options))) {}

TelemetryServer::~TelemetryServer() = default;

unsigned short TelemetryServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t TelemetryServer::connections() const { return impl_->registry.count(); }

void TelemetryServer::stop() {
    impl_->stopping = true;
}

void TelemetryServer::run() {
    using clock = std::chrono::steady_clock;
    Impl &s = *impl_;
    Gateway &gw = s.gateway;
    const double dt = gw.sim().config().plant.dt;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / s.options.frame_rate));
    constexpr int kMaxTicksPerPass = 1000;

    auto last = clock::now();
    auto next_frame = last;
    double budget = 0.0; // simulated seconds owed
    bool final_sent = false;

    while (!s.stopping) {
        gw.process_commands();
        const auto now = clock::now();
        const double elapsed = std::chrono::duration<double>(now - last).count();
        last = now;
        if (gw.loop().paused || gw.sim().finished()) {
            budget = 0.0;
        } else {
            budget += elapsed * gw.loop().speed;
        }
        for (int k = 0; k < kMaxTicksPerPass && budget >= dt; ++k) {
            if (!gw.step()) break;
            budget -= dt;
        }
        budget = std::min(budget, dt * kMaxTicksPerPass);

        if (now >= next_frame) {
            s.broadcast(gw.frame());
            next_frame = std::max(next_frame + period, now);
            if (gw.sim().finished()) {
                if (final_sent && s.options.exit_when_finished) break;
                final_sent = true;
            }
        }
        std::this_thread::sleep_until(std::min(next_frame, clock::now() + std::chrono::milliseconds(2)));
    }
    // Answer anything that arrived while shutting down.
    gw.process_commands();
    for (auto &session : s.registry.live()) session->close();
}

} // namespace blimpswarm::gateway
