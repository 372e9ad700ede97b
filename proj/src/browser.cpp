#include "wayfarer/browser.hpp"

#include <httplib.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <thread>

namespace wayfarer {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

// Tags interactive elements with a stable data-wf-key and reports the page state.
// The leading marker lets test doubles recognize the script.
constexpr const char* kSnapshotScript = R"JS(/*wf:snapshot*/(() => {
  const W = window;
  if (W.__wfNext === undefined) W.__wfNext = 1;
  const tag = (e) => { if (!e.dataset.wfKey) e.dataset.wfKey = 'wf' + (W.__wfNext++); return e.dataset.wfKey; };
  const roleOf = (e) => {
    const t = e.tagName.toLowerCase();
    if (t === 'a') return 'link';
    if (t === 'button') return 'button';
    if (t === 'select') return 'select';
    if (t === 'iframe') return 'iframe_boundary';
    if (t === 'textarea') return 'input';
    if (t === 'img') return 'image';
    if (t === 'input') return ['submit', 'button', 'reset', 'image'].includes((e.type || '').toLowerCase()) ? 'button' : 'input';
    return e.getAttribute('role') === 'link' ? 'link' : 'button';
  };
  const out = [];
  const sel = 'a[href],button,input:not([type=hidden]),select,textarea,[role=button],[role=link],[onclick],iframe';
  for (const e of document.querySelectorAll(sel)) {
    const r = e.getBoundingClientRect();
    if (r.width <= 0 || r.height <= 0) continue;
    if (r.bottom < 0 || r.right < 0 || r.top > innerHeight || r.left > innerWidth) continue;
    const role = roleOf(e);
    const value = role === 'select' ? (e.selectedIndex >= 0 ? e.options[e.selectedIndex].text : '')
                : role === 'input' ? String(e.value) : null;
    out.push({key: tag(e), role,
              label: (e.innerText || e.value || e.alt || e.title || '').trim().slice(0, 120),
              name: e.getAttribute('aria-label') || e.getAttribute('placeholder') || e.getAttribute('name') || '',
              value, options: role === 'select' ? Array.from(e.options).map(o => o.text) : [],
              enabled: !e.disabled, rect: [r.left, r.top, r.width, r.height]});
  }
  const a = document.activeElement;
  const dlg = document.querySelector('dialog[open],[role=dialog],[aria-modal=true]');
  return {url: location.href, text: document.body ? document.body.innerText.slice(0, 20000) : '',
          focused: a && a.dataset && a.dataset.wfKey ? a.dataset.wfKey : null,
          scroll: [scrollX, scrollY], modal: dlg ? tag(dlg) : null, elements: out};
})())JS";

std::string js_string(const std::string& s) { return Json(s).dump(); }

std::string element_script(const std::string& marker, const std::string& key, const std::string& body) {
    return "/*wf:" + marker + "*/(() => { const e = document.querySelector('[data-wf-key=' + " + js_string(key) +
           " + ']'); if (!e) return null; " + body + " })()";
}

struct ParsedWsUrl {
    std::string host;
    std::string port;
    std::string target;
};

ParsedWsUrl parse_ws_url(const std::string& url) {
    const std::string scheme = "ws://";
    if (url.rfind(scheme, 0) != 0) throw ConnectFailed("unsupported websocket url '" + url + "'");
    auto rest = url.substr(scheme.size());
    auto slash = rest.find('/');
    auto authority = rest.substr(0, slash);
    ParsedWsUrl out;
    out.target = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = authority.rfind(':');
    out.host = authority.substr(0, colon);
    out.port = colon == std::string::npos ? "80" : authority.substr(colon + 1);
    return out;
}

struct KeyInfo {
    std::string key;
    std::string code;
    int vk = 0;
    std::string text;
};

KeyInfo key_info(const std::string& name) {
    static const std::map<std::string, KeyInfo> named = {
        {"Enter", {"Enter", "Enter", 13, "\r"}},      {"Backspace", {"Backspace", "Backspace", 8, ""}},
        {"Tab", {"Tab", "Tab", 9, ""}},               {"Escape", {"Escape", "Escape", 27, ""}},
        {"Delete", {"Delete", "Delete", 46, ""}},     {"ArrowUp", {"ArrowUp", "ArrowUp", 38, ""}},
        {"ArrowDown", {"ArrowDown", "ArrowDown", 40, ""}}, {"ArrowLeft", {"ArrowLeft", "ArrowLeft", 37, ""}},
        {"ArrowRight", {"ArrowRight", "ArrowRight", 39, ""}}, {"PageUp", {"PageUp", "PageUp", 33, ""}},
        {"PageDown", {"PageDown", "PageDown", 34, ""}}, {"Home", {"Home", "Home", 36, ""}},
        {"End", {"End", "End", 35, ""}},              {"Space", {" ", "Space", 32, " "}},
    };
    if (auto it = named.find(name); it != named.end()) return it->second;
    if (name.size() == 4 && name.rfind("Key", 0) == 0) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(name[3])));
        return {std::string(1, c), name, std::toupper(static_cast<unsigned char>(c)), std::string(1, c)};
    }
    if (name.size() == 6 && name.rfind("Digit", 0) == 0) return {name.substr(5), name, name[5], name.substr(5)};
    if (name.size() == 1) {
        char c = name[0];
        if (std::isalpha(static_cast<unsigned char>(c)))
            return {name, std::string("Key") + static_cast<char>(std::toupper(static_cast<unsigned char>(c))),
                    std::toupper(static_cast<unsigned char>(c)), name};
        return {name, "", static_cast<int>(static_cast<unsigned char>(c)), name};
    }
    return {name, name, 0, ""};
}

}  // namespace

BrowserConfig BrowserConfig::from_json(const Json& j) {
    BrowserConfig c;
    c.endpoint = j.value("endpoint", c.endpoint);
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.settle_ms = j.value("settle_ms", c.settle_ms);
    c.nav_timeout_ms = j.value("nav_timeout_ms", c.nav_timeout_ms);
    c.command_timeout_ms = j.value("command_timeout_ms", c.command_timeout_ms);
    if (c.width <= 0 || c.height <= 0) throw std::invalid_argument("browser viewport must be positive");
    return c;
}

Json to_json(const BrowserConfig& c) {
    return Json{{"endpoint", c.endpoint},         {"width", c.width},
                {"height", c.height},             {"settle_ms", c.settle_ms},
                {"nav_timeout_ms", c.nav_timeout_ms}, {"command_timeout_ms", c.command_timeout_ms}};
}

std::pair<double, double> to_device(Point p, int width, int height) {
    return {static_cast<double>(p.x) * width / kNormalizedMax, static_cast<double>(p.y) * height / kNormalizedMax};
}

Rect to_normalized(double x, double y, double w, double h, int width, int height) {
    auto nx = [&](double v) { return std::clamp(static_cast<int>(std::lround(v * kNormalizedMax / width)), 0, kNormalizedMax); };
    auto ny = [&](double v) { return std::clamp(static_cast<int>(std::lround(v * kNormalizedMax / height)), 0, kNormalizedMax); };
    return Rect{nx(x), ny(y), nx(x + w), ny(y + h)};
}

// ---- websocket connection ----

struct CdpConnection::Impl {
    net::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    std::chrono::milliseconds timeout;
    long next_id = 1;
    bool dead = false;

    // Runs one async operation to completion or until the timeout elapses.
    template <typename Start>
    void run(Start start, const char* what) {
        bool done = false;
        beast::error_code result;
        start([&](beast::error_code ec, auto&&...) {
            result = ec;
            done = true;
        });
        ioc.restart();
        ioc.run_for(timeout);
        if (!done) {
            beast::error_code ignored;
            beast::get_lowest_layer(ws).socket().close(ignored);
            ioc.restart();
            ioc.run();
            dead = true;
            throw ProtocolError(std::string(what) + " timed out");
        }
        if (result) {
            dead = true;
            throw ProtocolError(std::string(what) + ": " + result.message());
        }
    }
};

CdpConnection::CdpConnection(const std::string& ws_url, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>()) {
    impl_->timeout = timeout;
    auto url = parse_ws_url(ws_url);
    try {
        tcp::resolver resolver(impl_->ioc);
        auto endpoints = resolver.resolve(url.host, url.port);
        impl_->run([&](auto handler) { beast::get_lowest_layer(impl_->ws).async_connect(endpoints, handler); },
                   "connect");
        impl_->run([&](auto handler) { impl_->ws.async_handshake(url.host + ":" + url.port, url.target, handler); },
                   "handshake");
    } catch (const std::exception& e) {
        throw ConnectFailed("cannot open " + ws_url + ": " + e.what());
    }
    impl_->ws.read_message_max(64u << 20);
}

CdpConnection::~CdpConnection() {
    if (!impl_->dead) {
        beast::error_code ignored;
        beast::get_lowest_layer(impl_->ws).socket().close(ignored);
    }
}

bool CdpConnection::alive() const { return !impl_->dead; }

Json CdpConnection::call(const std::string& method, const Json& params,
                         std::optional<std::chrono::milliseconds> timeout) {
    if (impl_->dead) throw ProtocolError("connection closed");
    auto saved = impl_->timeout;
    if (timeout) impl_->timeout = *timeout;
    struct Restore {
        Impl& impl;
        std::chrono::milliseconds value;
        ~Restore() { impl.timeout = value; }
    } restore{*impl_, saved};
    long id = impl_->next_id++;
    auto payload = Json{{"id", id}, {"method", method}, {"params", params}}.dump();
    impl_->run([&](auto handler) { impl_->ws.async_write(net::buffer(payload), handler); }, method.c_str());
    for (;;) {
        beast::flat_buffer buffer;
        impl_->run([&](auto handler) { impl_->ws.async_read(buffer, handler); }, method.c_str());
        auto reply = Json::parse(beast::buffers_to_string(buffer.data()), nullptr, false);
        if (reply.is_discarded() || !reply.is_object()) continue;
        if (!reply.contains("id") || reply["id"] != id) continue;
        if (reply.contains("error")) {
            throw ProtocolError(method + " failed: " + reply["error"].value("message", reply["error"].dump()));
        }
        return reply.value("result", Json::object());
    }
}

// ---- environment ----

BrowserEnvironment::BrowserEnvironment(BrowserConfig config) : config_(std::move(config)) {
    httplib::Client http(config_.endpoint);
    http.set_connection_timeout(std::chrono::milliseconds(config_.command_timeout_ms));
    http.set_read_timeout(std::chrono::milliseconds(config_.command_timeout_ms));
    auto res = http.Get("/json/list");
    if (!res || res->status != 200) throw ConnectFailed("no debugging endpoint at " + config_.endpoint);
    auto list = Json::parse(res->body, nullptr, false);
    if (!list.is_array()) throw ConnectFailed("target list from " + config_.endpoint + " is not a JSON array");
    for (const auto& t : list) {
        if (t.value("type", "") == "page" && t.contains("webSocketDebuggerUrl")) {
            targets_.push_back({t.value("id", ""), t["webSocketDebuggerUrl"].get<std::string>()});
            break;
        }
    }
    if (targets_.empty()) {
        auto created = http.Put("/json/new?about:blank");
        if (!created || created->status != 200) throw ConnectFailed("cannot create a page target");
        auto t = Json::parse(created->body, nullptr, false);
        if (!t.is_object() || !t.contains("webSocketDebuggerUrl")) throw ConnectFailed("malformed new-target reply");
        targets_.push_back({t.value("id", ""), t["webSocketDebuggerUrl"].get<std::string>()});
    }
    try {
        attach(targets_.back());
    } catch (const ProtocolError& e) {
        throw ConnectFailed(e.what());
    }
}

BrowserEnvironment::~BrowserEnvironment() = default;

void BrowserEnvironment::attach(const Target& target) {
    conn_ = std::make_unique<CdpConnection>(target.ws_url, std::chrono::milliseconds(config_.command_timeout_ms));
    conn_->call("Page.enable");
    conn_->call("Emulation.setDeviceMetricsOverride",
                {{"width", config_.width}, {"height", config_.height}, {"deviceScaleFactor", 1}, {"mobile", false}});
    frame_contexts_.clear();
}

Json BrowserEnvironment::evaluate(const std::string& expression, std::optional<long> context) {
    Json params{{"expression", expression}, {"returnByValue", true}, {"awaitPromise", true}};
    if (context) params["contextId"] = *context;
    auto result = conn_->call("Runtime.evaluate", params);
    if (result.contains("exceptionDetails")) throw ProtocolError("script error: " + result["exceptionDetails"].dump());
    return result.contains("result") ? result["result"].value("value", Json()) : Json();
}

std::optional<long> BrowserEnvironment::context_for(const std::string& key) const {
    auto it = frame_contexts_.find(key);
    if (it == frame_contexts_.end()) return std::nullopt;
    return it->second;
}

void BrowserEnvironment::collect_frames(const Json& tree, const std::vector<std::string>& path, PageSnapshot& out) {
    for (const auto& child : tree.value("childFrames", Json::array())) {
        auto frame_id = child["frame"].value("id", "");
        auto frame_path = path;
        frame_path.push_back(frame_id);
        try {
            auto world = conn_->call("Page.createIsolatedWorld", {{"frameId", frame_id}, {"worldName", "wayfarer"}});
            long context = world.value("executionContextId", 0L);
            auto owner = conn_->call("DOM.getFrameOwner", {{"frameId", frame_id}});
            auto box = conn_->call("DOM.getBoxModel", {{"backendNodeId", owner.value("backendNodeId", 0)}});
            const auto& content = box["model"]["content"];
            double ox = content.at(0).get<double>();
            double oy = content.at(1).get<double>();
            auto state = evaluate(kSnapshotScript, context);
            for (const auto& e : state.value("elements", Json::array())) {
                ElementRecord rec;
                auto raw_key = e.value("key", "");
                rec.key = frame_id + "/" + raw_key;
                rec.role = element_role_from_string(e.value("role", "other")).value_or(ElementRole::other);
                rec.label = e.value("label", "");
                rec.name = e.value("name", "");
                if (e.contains("value") && e["value"].is_string()) rec.value = e["value"].get<std::string>();
                rec.options = e.value("options", std::vector<std::string>{});
                rec.enabled = e.value("enabled", true);
                const auto& r = e.at("rect");
                rec.bbox = to_normalized(ox + r[0].get<double>(), oy + r[1].get<double>(), r[2].get<double>(),
                                         r[3].get<double>(), config_.width, config_.height);
                rec.frame_path = frame_path;
                frame_contexts_[rec.key] = context;
                out.interactive_elements.push_back(std::move(rec));
            }
            if (state.contains("focused") && state["focused"].is_string() && !out.focused_element)
                out.focused_element = frame_id + "/" + state["focused"].get<std::string>();
        } catch (const ProtocolError& e) {
            if (!conn_->alive()) throw;
            spdlog::warn("frame {} skipped: {}", frame_id, e.what());
        }
        collect_frames(child, frame_path, out);
    }
}

PageSnapshot BrowserEnvironment::snapshot() {
    PageSnapshot snap;
    try {
        auto state = evaluate(kSnapshotScript);
        snap.url = state.value("url", "");
        snap.visible_text = state.value("text", "");
        last_text_ = snap.visible_text;
        if (state.contains("focused") && state["focused"].is_string()) snap.focused_element = state["focused"].get<std::string>();
        if (state.contains("scroll")) {
            snap.scroll_position.x = static_cast<int>(std::lround(state["scroll"][0].get<double>() * kNormalizedMax / config_.width));
            snap.scroll_position.y = static_cast<int>(std::lround(state["scroll"][1].get<double>() * kNormalizedMax / config_.height));
        }
        if (state.contains("modal") && state["modal"].is_string()) {
            snap.modal_open = true;
            snap.modal_element = state["modal"].get<std::string>();
        }
        frame_contexts_.clear();
        for (const auto& e : state.value("elements", Json::array())) {
            ElementRecord rec;
            rec.key = e.value("key", "");
            rec.role = element_role_from_string(e.value("role", "other")).value_or(ElementRole::other);
            rec.label = e.value("label", "");
            rec.name = e.value("name", "");
            if (e.contains("value") && e["value"].is_string()) rec.value = e["value"].get<std::string>();
            rec.options = e.value("options", std::vector<std::string>{});
            rec.enabled = e.value("enabled", true);
            const auto& r = e.at("rect");
            rec.bbox = to_normalized(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>(),
                                     config_.width, config_.height);
            snap.interactive_elements.push_back(std::move(rec));
        }
        auto tree = conn_->call("Page.getFrameTree");
        collect_frames(tree.value("frameTree", Json::object()), {}, snap);
    } catch (const std::exception& e) {
        spdlog::warn("snapshot failed: {}", e.what());
        PageSnapshot dead;
        for (auto c : kAllChannels) dead.unavailable.insert(c);
        return dead;
    }
    try {
        auto shot = conn_->call("Page.captureScreenshot", {{"format", "png"}});
        auto bytes = base64_decode(shot.value("data", ""));
        snap.screenshot = std::make_shared<const Raster>(decode_png(bytes));
    } catch (const std::exception& e) {
        spdlog::warn("screenshot unavailable: {}", e.what());
    }
    return snap;
}

std::optional<std::string> BrowserEnvironment::read_value(const std::string& key) {
    auto raw = key.substr(key.rfind('/') == std::string::npos ? 0 : key.rfind('/') + 1);
    try {
        auto v = evaluate(element_script("read", raw,
                                         "return e.tagName.toLowerCase() === 'select' ? "
                                         "(e.selectedIndex >= 0 ? e.options[e.selectedIndex].text : '') : "
                                         "('value' in e ? String(e.value) : e.innerText);"),
                          context_for(key));
        if (v.is_string()) return v.get<std::string>();
    } catch (const ProtocolError& e) {
        spdlog::warn("read_value({}) failed: {}", key, e.what());
    }
    return std::nullopt;
}

bool BrowserEnvironment::blocked() {
    auto text = to_lower(last_text_);
    for (const char* marker : {"captcha", "access denied", "verify you are human"}) {
        if (text.find(marker) != std::string::npos) return true;
    }
    return false;
}

void BrowserEnvironment::dispatch_key(const std::string& chord) {
    int modifiers = 0;
    std::string name = chord;
    for (auto pos = name.find('+'); pos != std::string::npos && pos + 1 < name.size(); pos = name.find('+')) {
        auto mod = name.substr(0, pos);
        if (mod == "Alt") modifiers |= 1;
        else if (mod == "Control") modifiers |= 2;
        else if (mod == "Meta") modifiers |= 4;
        else if (mod == "Shift") modifiers |= 8;
        name = name.substr(pos + 1);
    }
    auto info = key_info(name);
    Json down{{"type", info.text.empty() || modifiers & 6 ? "rawKeyDown" : "keyDown"},
              {"key", info.key},
              {"code", info.code},
              {"windowsVirtualKeyCode", info.vk},
              {"modifiers", modifiers}};
    if (!info.text.empty() && !(modifiers & 6)) down["text"] = info.text;
    if (modifiers == 2 && info.code == "KeyA") down["commands"] = Json::array({"selectAll"});
    conn_->call("Input.dispatchKeyEvent", down);
    conn_->call("Input.dispatchKeyEvent", {{"type", "keyUp"},
                                            {"key", info.key},
                                            {"code", info.code},
                                            {"windowsVirtualKeyCode", info.vk},
                                            {"modifiers", modifiers}});
}

void BrowserEnvironment::settle(int ms) const {
    if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

std::optional<ExecError> BrowserEnvironment::execute(const EnvOp& op) {
    try {
        auto err = run(op);
        if (!err) settle(config_.settle_ms);
        return err;
    } catch (const ProtocolError& e) {
        return ExecError{ErrorCode::ProtocolError, e.what()};
    } catch (const std::exception& e) {
        return ExecError{ErrorCode::EnvironmentError, e.what()};
    }
}

std::optional<ExecError> BrowserEnvironment::run(const EnvOp& op) {
    auto raw_key = [](const std::string& key) {
        auto slash = key.rfind('/');
        return slash == std::string::npos ? key : key.substr(slash + 1);
    };
    auto mouse = [&](const char* type, Point p, int clicks) {
        auto [x, y] = to_device(p, config_.width, config_.height);
        Json params{{"type", type}, {"x", x}, {"y", y}};
        if (clicks) {
            params["button"] = "left";
            params["clickCount"] = clicks;
        }
        conn_->call("Input.dispatchMouseEvent", params);
    };
    switch (op.kind) {
        case EnvOpKind::click_at:
            mouse("mouseMoved", *op.point, 0);
            mouse("mousePressed", *op.point, 1);
            mouse("mouseReleased", *op.point, 1);
            return std::nullopt;
        case EnvOpKind::hover_at: mouse("mouseMoved", *op.point, 0); return std::nullopt;
        case EnvOpKind::click_element:
        case EnvOpKind::focus_element: {
            bool click = op.kind == EnvOpKind::click_element;
            auto v = evaluate(element_script(click ? "click" : "focus", raw_key(op.element),
                                             click ? "e.click(); return true;" : "e.focus(); return true;"),
                              context_for(op.element));
            if (v.is_null()) return ExecError{ErrorCode::ElementNotFound, "no element '" + op.element + "'"};
            return std::nullopt;
        }
        case EnvOpKind::key_press: dispatch_key(op.text); return std::nullopt;
        case EnvOpKind::type_text: conn_->call("Input.insertText", {{"text", op.text}}); return std::nullopt;
        case EnvOpKind::set_value: {
            auto v = evaluate(element_script("set_value", raw_key(op.element),
                                             "const want = " + js_string(op.text) + ";"
                                             "if (e.tagName.toLowerCase() === 'select') {"
                                             "  const i = Array.from(e.options).findIndex(o => o.text === want || o.value === want);"
                                             "  if (i < 0) return false; e.selectedIndex = i;"
                                             "} else { e.value = want; }"
                                             "e.dispatchEvent(new Event('input', {bubbles: true}));"
                                             "e.dispatchEvent(new Event('change', {bubbles: true})); return true;"),
                              context_for(op.element));
            if (v.is_null()) return ExecError{ErrorCode::ElementNotFound, "no element '" + op.element + "'"};
            if (v == false) return ExecError{ErrorCode::OptionNotFound, "no option '" + op.text + "'"};
            return std::nullopt;
        }
        case EnvOpKind::scroll: {
            std::string expr = "/*wf:scroll*/";
            if (op.text == "up") expr += "window.scrollBy(0, -innerHeight / 4)";
            else if (op.text == "down") expr += "window.scrollBy(0, innerHeight / 4)";
            else if (op.text == "top") expr += "window.scrollTo(0, 0)";
            else expr += "window.scrollTo(0, document.documentElement.scrollHeight)";
            evaluate(expr);
            return std::nullopt;
        }
        case EnvOpKind::navigate: {
            auto r = conn_->call("Page.navigate", {{"url", op.text}}, std::chrono::milliseconds(config_.nav_timeout_ms));
            if (r.contains("errorText") && !r["errorText"].get<std::string>().empty())
                return ExecError{ErrorCode::EnvironmentError, r["errorText"].get<std::string>()};
            return std::nullopt;
        }
        case EnvOpKind::go_back: evaluate("/*wf:back*/history.back()"); return std::nullopt;
        case EnvOpKind::go_forward: evaluate("/*wf:forward*/history.forward()"); return std::nullopt;
        case EnvOpKind::new_tab: {
            httplib::Client http(config_.endpoint);
            auto res = http.Put("/json/new?about:blank");
            if (!res || res->status != 200) return ExecError{ErrorCode::EnvironmentError, "cannot open a new tab"};
            auto t = Json::parse(res->body, nullptr, false);
            if (!t.is_object() || !t.contains("webSocketDebuggerUrl"))
                return ExecError{ErrorCode::EnvironmentError, "malformed new-target reply"};
            targets_.push_back({t.value("id", ""), t["webSocketDebuggerUrl"].get<std::string>()});
            attach(targets_.back());
            return std::nullopt;
        }
        case EnvOpKind::close_tab: {
            if (targets_.size() < 2) return std::nullopt;
            httplib::Client http(config_.endpoint);
            http.Get("/json/close/" + targets_.back().id);
            targets_.pop_back();
            attach(targets_.back());
            return std::nullopt;
        }
        case EnvOpKind::wait:
            settle(static_cast<int>(std::min(op.seconds, 30.0) * 1000));
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace wayfarer
