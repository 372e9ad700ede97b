#pragma once

// Environment backed by a real browser over the Chrome remote-debugging protocol.

#include "wayfarer/environment.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wayfarer {

class ConnectFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BrowserConfig {
    std::string endpoint = "http://127.0.0.1:9222";  // discovery (HTTP) endpoint
    int width = 1280;
    int height = 800;
    int settle_ms = 500;
    int nav_timeout_ms = 30000;
    int command_timeout_ms = 10000;

    static BrowserConfig from_json(const Json& j);
};
Json to_json(const BrowserConfig& config);

// normalized [0,1000] -> device pixels for the configured viewport.
std::pair<double, double> to_device(Point p, int width, int height);
// Device pixel rectangle (x, y, w, h) -> normalized, clamped to the viewport.
Rect to_normalized(double x, double y, double w, double h, int width, int height);

// One websocket connection to a debugging target. Commands are serialized.
class CdpConnection {
public:
    CdpConnection(const std::string& ws_url, std::chrono::milliseconds timeout);
    ~CdpConnection();
    CdpConnection(const CdpConnection&) = delete;
    CdpConnection& operator=(const CdpConnection&) = delete;

    // Sends one command and waits for its reply, skipping events. Throws
    // ProtocolError on disconnect, timeout or an error reply.
    Json call(const std::string& method, const Json& params = Json::object(),
              std::optional<std::chrono::milliseconds> timeout = std::nullopt);
    bool alive() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class BrowserEnvironment final : public Environment {
public:
    // Attaches to the first page target (creating one if none). Throws ConnectFailed.
    explicit BrowserEnvironment(BrowserConfig config);
    ~BrowserEnvironment() override;

    Capabilities capabilities() const override { return {true, true}; }
    PageSnapshot snapshot() override;
    std::optional<std::string> read_value(const std::string& key) override;
    bool blocked() override;

    const BrowserConfig& config() const { return config_; }

protected:
    std::optional<ExecError> execute(const EnvOp& op) override;

private:
    struct Target {
        std::string id;
        std::string ws_url;
    };

    void attach(const Target& target);
    Json evaluate(const std::string& expression, std::optional<long> context = std::nullopt);
    std::optional<long> context_for(const std::string& key) const;
    void collect_frames(const Json& tree, const std::vector<std::string>& path, PageSnapshot& out);
    void dispatch_key(const std::string& code);
    void settle(int ms) const;
    std::optional<ExecError> run(const EnvOp& op);

    BrowserConfig config_;
    std::vector<Target> targets_;
    std::unique_ptr<CdpConnection> conn_;
    std::map<std::string, long> frame_contexts_;  // element key -> isolated world of its frame
    std::string last_text_;
};

}  // namespace wayfarer
