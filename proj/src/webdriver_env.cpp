#include "netgent/webdriver_env.hpp"

#include "netgent/detectors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <thread>

namespace netgent::env {
namespace {

constexpr const char* kElementKey = "element-6066-11e4-a52e-4f735466cecf";

// Serializes the live DOM into the engine's canonical tree shape.
constexpr const char* kDomScript = R"JS(
function ser(n) {
  var o = {tag: n.tagName.toLowerCase(), id: n.id || null, classes: [],
           attributes: {}, text: '', children: []};
  for (var i = 0; i < n.classList.length; i++) o.classes.push(n.classList[i]);
  for (var i = 0; i < n.attributes.length; i++) {
    var a = n.attributes[i];
    if (a.name !== 'id' && a.name !== 'class') o.attributes[a.name] = a.value;
  }
  var t = '';
  for (var i = 0; i < n.childNodes.length; i++) {
    var c = n.childNodes[i];
    if (c.nodeType === 3) t += c.textContent;
  }
  o.text = t.trim();
  for (var i = 0; i < n.children.length; i++) o.children.push(ser(n.children[i]));
  return o;
}
return ser(document.documentElement);
)JS";

std::string key_to_webdriver_text(const std::string& key) {
    if (key == "Enter") return "";
    if (key == "Tab") return "";
    if (key == "Escape") return "";
    if (key == "Backspace") return "";
    if (key == "ArrowUp") return "";
    if (key == "ArrowDown") return "";
    if (key == "ArrowLeft") return "";
    if (key == "ArrowRight") return "";
    if (key == "Space") return " ";
    return key;
}

} // namespace

struct WebDriverEnv::Impl {
    WebDriverConfig config;
    httplib::Client client;
    std::string session_id;
    int64_t revision = 0;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    explicit Impl(WebDriverConfig cfg) : config(std::move(cfg)), client(config.endpoint_url) {
        client.set_read_timeout(60, 0);
        client.set_connection_timeout(10, 0);
        create_session();
    }

    int64_t now_tick() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - started)
            .count();
    }

    nlohmann::json request(const std::string& method, const std::string& path,
                           const nlohmann::json& body, int* status_out = nullptr) {
        httplib::Result res;
        if (method == "GET") {
            res = client.Get(path);
        } else if (method == "DELETE") {
            res = client.Delete(path);
        } else {
            res = client.Post(path, body.dump(), "application/json");
        }
        if (!res) {
            throw AdapterError("remote browser unreachable at " + config.endpoint_url + path +
                               " (" + httplib::to_string(res.error()) + ")");
        }
        if (status_out) *status_out = res->status;
        if (res->body.empty()) return nlohmann::json();
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw AdapterError("remote browser returned non-structured body for " + path);
        }
    }

    void create_session() {
        nlohmann::json always = nlohmann::json::object();
        if (config.proxy && !config.proxy->empty()) {
            always["proxy"] = nlohmann::json{{"proxyType", "manual"},
                                             {"httpProxy", *config.proxy},
                                             {"sslProxy", *config.proxy}};
        }
        if (config.profile_dir && !config.profile_dir->empty()) {
            always["goog:chromeOptions"] =
                nlohmann::json{{"args", {"--user-data-dir=" + *config.profile_dir}}};
        }
        int status = 0;
        const auto body = request(
            "POST", "/session",
            nlohmann::json{{"capabilities", nlohmann::json{{"alwaysMatch", always}}}}, &status);
        if (status != 200 || !body.contains("value") || !body["value"].contains("sessionId"))
            throw AdapterError("could not create remote browser session (HTTP " +
                               std::to_string(status) + ")");
        session_id = body["value"]["sessionId"].get<std::string>();
    }

    std::string sess(const std::string& suffix) const { return "/session/" + session_id + suffix; }

    // Empty result means no such element.
    std::optional<std::string> find_element(const std::string& css) {
        int status = 0;
        const auto body = request("POST", sess("/element"),
                                  nlohmann::json{{"using", "css selector"}, {"value", css}},
                                  &status);
        if (status == 404) return std::nullopt;
        if (status != 200 || !body.contains("value") || !body["value"].contains(kElementKey))
            throw AdapterError("element lookup failed for " + css);
        return body["value"][kElementKey].get<std::string>();
    }

    nlohmann::json execute(const std::string& script, const nlohmann::json& args) {
        int status = 0;
        const auto body = request("POST", sess("/execute/sync"),
                                  nlohmann::json{{"script", script}, {"args", args}}, &status);
        if (status != 200) throw AdapterError("script execution failed");
        return body.value("value", nlohmann::json());
    }
};

WebDriverEnv::WebDriverEnv(WebDriverConfig config) : impl_(new Impl(std::move(config))) {}

WebDriverEnv::~WebDriverEnv() {
    try {
        int status = 0;
        impl_->request("DELETE", impl_->sess(""), {}, &status);
    } catch (...) {
        // session teardown is best-effort
    }
}

const std::string& WebDriverEnv::session_id() const { return impl_->session_id; }

EnvCapabilities WebDriverEnv::capabilities() const {
    EnvCapabilities caps;
    caps.supports_mouse_paths = false;   // protocol has no OS-level pointer stream
    caps.supports_proxy = true;
    caps.supports_profile_dir = true;
    return caps;
}

page::PageSnapshot WebDriverEnv::observe() {
    page::PageSnapshot snap;
    int status = 0;
    const auto url_body = impl_->request("GET", impl_->sess("/url"), {}, &status);
    if (status != 200) throw AdapterError("cannot read current url");
    snap.url = url_body.value("value", std::string());
    const auto title_body = impl_->request("GET", impl_->sess("/title"), {}, &status);
    snap.title = title_body.value("value", std::string());
    const auto dom = impl_->execute(kDomScript, nlohmann::json::array());
    if (!dom.is_object()) throw AdapterError("dom serialization script returned no tree");
    snap.root = page::dom_from_json(dom);
    page::assign_node_indexes(snap.root);
    snap.captured_at = impl_->now_tick();
    snap.env_revision = impl_->revision;
    return snap;
}

StepResult WebDriverEnv::perform(const actions::Instruction& ins,
                                 const actions::RealismParams& realism, int index) {
    (void)realism;
    using namespace actions;

    auto ok = [&]() {
        StepResult r;
        r.ok = true;
        r.observed_after = observe();
        return r;
    };
    auto fail = [&](FailureKind kind, const std::string& detail) {
        return StepResult::failed(index, kind, detail, observe());
    };

    try {
        if (const auto* nav = std::get_if<Navigate>(&ins)) {
            int status = 0;
            impl_->request("POST", impl_->sess("/url"), nlohmann::json{{"url", nav->url}},
                           &status);
            if (status != 200) return fail(FailureKind::navigation_error, "navigate " + nav->url);
            ++impl_->revision;
            return ok();
        }
        if (const auto* sl = std::get_if<Sleep>(&ins)) {
            std::this_thread::sleep_for(std::chrono::milliseconds(sl->ms));
            return ok();
        }
        if (const auto* wf = std::get_if<WaitFor>(&ins)) {
            int waited = 0;
            while (true) {
                if (detect::match_detector(wf->detector, observe())) return ok();
                if (waited >= wf->timeout_ms)
                    return fail(FailureKind::timeout,
                                "wait_for timed out after " + std::to_string(waited) + "ms");
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(impl_->config.poll_interval_ms));
                waited += impl_->config.poll_interval_ms;
            }
        }
        if (const auto* as = std::get_if<AssertDetector>(&ins)) {
            if (detect::match_detector(as->detector, observe())) return ok();
            return fail(FailureKind::selector_not_found, "assert_detector: detector did not match");
        }
        if (const auto* sc = std::get_if<Scroll>(&ins)) {
            impl_->execute("window.scrollBy(0, arguments[0]); return null;",
                           nlohmann::json::array({sc->delta_y}));
            ++impl_->revision;
            return ok();
        }
        if (const auto* pk = std::get_if<PressKey>(&ins)) {
            int status = 0;
            const auto body =
                impl_->request("GET", impl_->sess("/element/active"), {}, &status);
            if (status != 200 || !body.contains("value") || !body["value"].contains(kElementKey))
                return fail(FailureKind::adapter_error, "no active element for press_key");
            const std::string eid = body["value"][kElementKey].get<std::string>();
            impl_->request("POST", impl_->sess("/element/" + eid + "/value"),
                           nlohmann::json{{"text", key_to_webdriver_text(pk->key)}}, &status);
            if (status != 200) return fail(FailureKind::adapter_error, "press_key rejected");
            ++impl_->revision;
            return ok();
        }

        // Selector-addressed instructions resolve before acting (fail-before-act).
        const page::SelectorAst* sel = nullptr;
        if (const auto* cl = std::get_if<Click>(&ins)) sel = &cl->selector;
        else if (const auto* ty = std::get_if<TypeText>(&ins)) sel = &ty->selector;
        else if (const auto* hv = std::get_if<Hover>(&ins)) sel = &hv->selector;
        else if (const auto* dr = std::get_if<DragToFraction>(&ins)) sel = &dr->selector;
        const std::string css = page::serialize_selector(*sel);
        const auto eid = impl_->find_element(css);
        if (!eid) return fail(FailureKind::selector_not_found, css + " matched nothing");

        int status = 0;
        if (std::get_if<Click>(&ins)) {
            impl_->request("POST", impl_->sess("/element/" + *eid + "/click"),
                           nlohmann::json::object(), &status);
            if (status != 200) return fail(FailureKind::adapter_error, "click rejected");
            ++impl_->revision;
            return ok();
        }
        if (const auto* ty = std::get_if<TypeText>(&ins)) {
            const std::string resolved = resolve_secret_text(ty->text);
            impl_->request("POST", impl_->sess("/element/" + *eid + "/value"),
                           nlohmann::json{{"text", resolved}}, &status);
            if (status != 200) return fail(FailureKind::adapter_error, "send keys rejected");
            ++impl_->revision;
            return ok();
        }
        if (std::get_if<Hover>(&ins)) {
            const nlohmann::json actions_body{
                {"actions",
                 {{{"type", "pointer"},
                   {"id", "mouse"},
                   {"parameters", {{"pointerType", "mouse"}}},
                   {"actions",
                    {{{"type", "pointerMove"},
                      {"duration", 100},
                      {"origin", {{kElementKey, *eid}}},
                      {"x", 0},
                      {"y", 0}}}}}}}};
            impl_->request("POST", impl_->sess("/actions"), actions_body, &status);
            if (status != 200) return fail(FailureKind::adapter_error, "hover rejected");
            return ok();
        }
        const auto* dr = std::get_if<DragToFraction>(&ins);
        const char* script =
            "var e = arguments[0], f = arguments[1];"
            "var lo = parseFloat(e.min || e.getAttribute('min') || '0');"
            "var hi = parseFloat(e.max || e.getAttribute('max') || '100');"
            "e.value = lo + f * (hi - lo);"
            "e.dispatchEvent(new Event('input', {bubbles: true}));"
            "e.dispatchEvent(new Event('change', {bubbles: true}));"
            "return null;";
        impl_->execute(script,
                       nlohmann::json::array({nlohmann::json{{kElementKey, *eid}}, dr->fraction}));
        ++impl_->revision;
        return ok();
    } catch (const AdapterError& e) {
        StepResult r;
        r.ok = false;
        r.failure = StepFailure{index, FailureKind::adapter_error, e.what()};
        return r;
    }
}

} // namespace netgent::env
