// Roster view logic: pure functions from the fetched payload + sort state
// to row order and markup. No model math happens here.
export const DEFAULT_SORT = { key: "p_fail", dir: "desc" };
export function sortRoster(rows, state = DEFAULT_SORT) {
    const sign = state.dir === "asc" ? 1 : -1;
    return [...rows].sort((a, b) => {
        const va = a[state.key];
        const vb = b[state.key];
        if (va < vb)
            return -sign;
        if (va > vb)
            return sign;
        // stable tie-break so ordering is a pure function of the payload
        return a.student_id < b.student_id ? -1 : a.student_id > b.student_id ? 1 : 0;
    });
}
export function filterRoster(rows, flaggedOnly, query = "") {
    const q = query.trim().toLowerCase();
    return rows.filter((r) => (!flaggedOnly || r.flagged) &&
        (q === "" || r.student_id.toLowerCase().includes(q)));
}
export function flaggedCount(rows) {
    return rows.filter((r) => r.flagged).length;
}
export function escapeHtml(text) {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}
export function formatProbability(p) {
    return p.toFixed(3);
}
export function formatGrade(g) {
    return g.toFixed(1);
}
export function contributionsLabel(row) {
    return row.contributions
        .map((c) => `${c.feature} (${c.value >= 0 ? "+" : ""}${c.value.toFixed(3)})`)
        .join(", ");
}
export function rosterTableHTML(rows) {
    if (rows.length === 0) {
        return '<p class="empty">No students to display.</p>';
    }
    const body = rows
        .map((r) => `<tr class="${r.flagged ? "flagged" : ""}" data-sid="${escapeHtml(r.student_id)}">
  <td>${escapeHtml(r.student_id)}</td>
  <td class="num">${formatProbability(r.p_fail)}</td>
  <td class="num">${formatGrade(r.predicted_grade)}</td>
  <td>${r.flagged ? "⚠ at risk" : ""}</td>
  <td class="contrib">${escapeHtml(contributionsLabel(r))}</td>
</tr>`)
        .join("\n");
    return `<table class="roster">
<thead><tr>
  <th data-sort="student_id">Student</th>
  <th data-sort="p_fail">P(fail)</th>
  <th data-sort="predicted_grade">Predicted grade</th>
  <th>Flag</th>
  <th>Top contributions</th>
</tr></thead>
<tbody>
${body}
</tbody>
</table>`;
}
