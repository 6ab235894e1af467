// Browser wiring: fetch -> render -> handle events. Single page, no
// routing, no persistence beyond the token field. All numbers displayed
// come straight from API responses.
import { ApiClient, ApiError } from "./api.js";
import { DEFAULT_SORT, filterRoster, flaggedCount, rosterTableHTML, sortRoster, } from "./roster.js";
import { parseThreshold, validateThreshold } from "./threshold.js";
import { attachServerErrors, blankFields, collectPayload, riskPanelHTML, validateAll, } from "./whatif.js";
const state = {
    api: new ApiClient(localStorage.getItem("gl_origin") ?? window.location.origin, localStorage.getItem("gl_token")),
    model: null,
    roster: [],
    threshold: 0.7,
    sort: { ...DEFAULT_SORT },
    flaggedOnly: false,
    query: "",
    fields: [],
};
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
function showBanner(message, retry) {
    const banner = el("banner");
    banner.innerHTML = "";
    banner.className = "banner error";
    banner.textContent = message;
    if (retry) {
        const btn = document.createElement("button");
        btn.textContent = "Retry";
        btn.onclick = () => void boot();
        banner.appendChild(btn);
    }
    banner.hidden = false;
}
function hideBanner() {
    el("banner").hidden = true;
}
function renderRoster() {
    const rows = sortRoster(filterRoster(state.roster, state.flaggedOnly, state.query), state.sort);
    el("roster").innerHTML = rosterTableHTML(rows);
    el("flagged-count").textContent =
        `${flaggedCount(state.roster)} of ${state.roster.length} students flagged`;
    el("threshold-slider").value = String(state.threshold);
    el("threshold-value").textContent = state.threshold.toFixed(2);
    for (const th of document.querySelectorAll("th[data-sort]")) {
        th.onclick = () => {
            const key = th.dataset.sort;
            state.sort = {
                key,
                dir: state.sort.key === key && state.sort.dir === "desc" ? "asc" : "desc",
            };
            renderRoster();
        };
    }
    for (const tr of document.querySelectorAll("tr[data-sid]")) {
        tr.ondblclick = () => prefillWhatIf(tr.dataset.sid ?? "");
    }
}
function renderWhatIfForm() {
    const form = el("whatif-form");
    form.innerHTML = "";
    for (const field of state.fields) {
        const wrap = document.createElement("label");
        wrap.className = "field";
        wrap.textContent = field.spec.name;
        let input;
        if (field.spec.kind === "categorical") {
            input = document.createElement("select");
            for (const v of field.spec.values ?? []) {
                const opt = document.createElement("option");
                opt.value = v;
                opt.textContent = v;
                input.appendChild(opt);
            }
            input.value = field.raw;
        }
        else {
            input = document.createElement("input");
            input.type = "number";
            input.step = "any";
            if (field.spec.range) {
                input.min = String(field.spec.range[0]);
                input.max = String(field.spec.range[1]);
            }
            input.value = field.raw;
        }
        input.name = field.spec.name;
        input.onchange = () => {
            field.raw = input.value;
        };
        wrap.appendChild(input);
        const err = document.createElement("span");
        err.className = "field-error";
        err.textContent = field.error ?? "";
        wrap.appendChild(err);
        form.appendChild(wrap);
    }
    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Predict";
    form.appendChild(submit);
}
function prefillWhatIf(studentId) {
    // pre-populate from a roster row is not possible without raw features;
    // the teacher enters or adjusts values, so just focus the form
    el("whatif-title").textContent =
        studentId ? `What-if (starting from ${studentId})` : "What-if";
    el("whatif-form").scrollIntoView({ behavior: "smooth" });
}
async function refreshRoster() {
    const doc = await state.api.roster();
    state.roster = doc.roster;
    state.threshold = doc.threshold;
    renderRoster();
}
async function submitThreshold(raw) {
    const problem = validateThreshold(raw);
    if (problem) {
        el("threshold-error").textContent = problem;
        el("threshold-slider").value = String(state.threshold);
        return;
    }
    el("threshold-error").textContent = "";
    try {
        const doc = await state.api.setThreshold(parseThreshold(raw));
        state.threshold = doc.threshold;
    }
    catch (err) {
        if (err instanceof ApiError) {
            el("threshold-error").textContent = err.message;
        }
    }
    await refreshRoster();
}
async function submitWhatIf(event) {
    event.preventDefault();
    state.fields = validateAll(state.fields);
    renderWhatIfForm();
    if (state.fields.some((f) => f.error))
        return;
    try {
        const score = await state.api.predict(collectPayload(state.fields));
        el("whatif-result").innerHTML = riskPanelHTML(score);
    }
    catch (err) {
        if (err instanceof ApiError && err.status === 400) {
            state.fields = attachServerErrors(state.fields, err.fields);
            renderWhatIfForm();
        }
        else if (err instanceof ApiError && err.status === 401) {
            showBanner("Not authorized: set a valid API token.", false);
        }
    }
}
async function boot() {
    hideBanner();
    el("origin-input").value = state.api.origin;
    el("token-input").value = state.api.token ?? "";
    try {
        state.model = await state.api.model();
        state.fields = blankFields(state.model.features);
        await refreshRoster();
        renderWhatIfForm();
    }
    catch (err) {
        if (err instanceof ApiError && err.status === 401) {
            showBanner("Not authorized: enter the API token and reconnect.", true);
        }
        else {
            showBanner(`Cannot reach the risk service: ${String(err)}`, true);
        }
    }
}
export function start() {
    el("threshold-slider").onchange = (e) => void submitThreshold(e.target.value);
    el("flagged-only").onchange = (e) => {
        state.flaggedOnly = e.target.checked;
        renderRoster();
    };
    el("search-input").oninput = (e) => {
        state.query = e.target.value;
        renderRoster();
    };
    el("whatif-form").onsubmit = (e) => void submitWhatIf(e);
    el("connect-btn").onclick = () => {
        const origin = el("origin-input").value || window.location.origin;
        const token = el("token-input").value || null;
        localStorage.setItem("gl_origin", origin);
        if (token)
            localStorage.setItem("gl_token", token);
        else
            localStorage.removeItem("gl_token");
        state.api = new ApiClient(origin, token);
        void boot();
    };
    void boot();
}
if (typeof document !== "undefined" && document.getElementById("roster")) {
    start();
}
