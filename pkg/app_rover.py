"""
Rover Science Autonomy - Dashboard Streamlit
Post-hoc viewer for benchmark output folders (results.csv, traces.csv, timing.json)
"""

import os

import pandas as pd
import plotly.express as px
import plotly.graph_objects as go
import streamlit as st

from config.rover_config import EXPORT_SETTINGS, POLICY_COLORS
from modules.report_generator import ReportGenerator
from utils import load_json, setup_logging

setup_logging()

# Page Config
st.set_page_config(
    layout="wide",
    page_title="Rover Sensing Benchmark",
    page_icon="🪨"
)

st.markdown("""
<style>
    .main-header {
        background: linear-gradient(135deg, #1e3a8a 0%, #b45309 100%);
        padding: 20px;
        border-radius: 10px;
        color: white;
        margin-bottom: 20px;
    }
    .stTabs [data-baseweb="tab-list"] {
        gap: 8px;
    }
    .stTabs [data-baseweb="tab"] {
        padding: 10px 20px;
        background-color: #f3f4f6;
        border-radius: 8px 8px 0 0;
    }
</style>
""", unsafe_allow_html=True)

st.markdown("""
<div class="main-header">
    <h1>🪨 Rover Science Autonomy - Benchmark Results</h1>
    <p style='margin: 0; font-size: 16px;'>Information gain & accuracy per policy and sensing budget</p>
</div>
""", unsafe_allow_html=True)


@st.cache_data(show_spinner=False)
def load_run(folder: str):
    """Read a benchmark output folder; missing optional files come back empty."""
    results = pd.read_csv(os.path.join(folder, EXPORT_SETTINGS['results_csv']), keep_default_na=False)
    traces_path = os.path.join(folder, EXPORT_SETTINGS['traces_csv'])
    traces = pd.read_csv(traces_path, keep_default_na=False) if os.path.exists(traces_path) else pd.DataFrame()
    timing_path = os.path.join(folder, EXPORT_SETTINGS['timing_json'])
    timing = load_json(timing_path) if os.path.exists(timing_path) else {}
    manifest_path = os.path.join(folder, EXPORT_SETTINGS['manifest_json'])
    manifest = load_json(manifest_path) if os.path.exists(manifest_path) else {}
    return results, traces, timing, manifest


# Sidebar
st.sidebar.header("⚙️ Benchmark Output")
folder = st.sidebar.text_input("Folder", value="runs/desk", help="Output folder of `rover_cli.py benchmark`")

if not os.path.exists(os.path.join(folder, EXPORT_SETTINGS['results_csv'])):
    st.info(f"📂 No {EXPORT_SETTINGS['results_csv']} in `{folder}`. Run a benchmark first.")
    st.stop()

try:
    results, traces, timing, manifest = load_run(folder)
except Exception as e:
    st.error(f"❌ Failed to load {folder}: {e}")
    st.stop()

policies = list(dict.fromkeys(results['policy']))
budgets = sorted(results['budget'].unique())
selected_policies = st.sidebar.multiselect("Policies", policies, default=policies)
results = results[results['policy'].isin(selected_policies)]
if not traces.empty:
    traces = traces[traces['policy'].isin(selected_policies)]

report = ReportGenerator()
summary = report.summarize(results)

col1, col2, col3 = st.columns(3)
col1.metric("Missions", len(results))
col2.metric("Policies", len(selected_policies))
col3.metric("Budgets", ", ".join(f"{b:g}" for b in budgets))

tab1, tab2, tab3, tab4 = st.tabs([
    "📊 Tables",
    "📈 Curves",
    "🧪 Trials",
    "⏱️ Timing"
])

with tab1:
    for metric, label in report.METRICS.items():
        st.subheader(label)
        st.dataframe(report.mean_sigma_table(summary, metric), use_container_width=True)

        fig = go.Figure()
        for policy in selected_policies:
            rows = summary[summary['policy'] == policy]
            fig.add_trace(go.Bar(
                name=policy,
                x=[f"B={b:g}" for b in rows['budget']],
                y=rows[f'{metric}_mean'],
                error_y=dict(type='data', array=rows[f'{metric}_std'].fillna(0)),
                marker_color=POLICY_COLORS.get(policy)
            ))
        fig.update_layout(barmode='group', height=380, yaxis_title=label)
        st.plotly_chart(fig, use_container_width=True)

    increase = report.relative_increase(summary)
    if not increase.empty:
        st.subheader("Accuracy increase over random (%)")
        st.dataframe(increase, use_container_width=True)
        st.subheader("Paired difference vs random (95% bootstrap CI)")
        st.dataframe(report.paired_comparison(results), use_container_width=True)

with tab2:
    if traces.empty:
        st.warning("⚠️ No traces.csv in this folder")
    else:
        curves = report.gain_curves(traces)
        budget = st.selectbox("Budget", budgets, format_func=lambda b: f"{b:g}")
        shown = curves[curves['budget'] == budget]
        fig = px.line(shown, x='spent', y='info_gain', color='policy',
                      color_discrete_map=POLICY_COLORS,
                      labels={'spent': 'Budget spent', 'info_gain': 'Information gain (bits)'})
        st.plotly_chart(fig, use_container_width=True)
        fig_acc = px.line(shown, x='spent', y='accuracy', color='policy',
                          color_discrete_map=POLICY_COLORS,
                          labels={'spent': 'Budget spent', 'accuracy': 'Accuracy score'})
        st.plotly_chart(fig_acc, use_container_width=True)

with tab3:
    fig = px.box(results, x='policy', y='info_gain', color='policy', facet_col='budget',
                 color_discrete_map=POLICY_COLORS, points='all')
    st.plotly_chart(fig, use_container_width=True)
    st.dataframe(results, use_container_width=True, height=400)

with tab4:
    if not timing:
        st.warning("⚠️ No timing.json in this folder")
    else:
        df_timing = pd.DataFrame(timing).T.reset_index().rename(columns={'index': 'policy'})
        st.dataframe(df_timing, use_container_width=True)
    if manifest:
        with st.expander("Manifest"):
            st.json(manifest)

st.sidebar.markdown("---")
st.sidebar.download_button(
    label="📥 Download Excel",
    data=report.generate_excel(results, traces if not traces.empty else None),
    file_name=f"{os.path.basename(os.path.normpath(folder))}_{EXPORT_SETTINGS['report_xlsx']}",
    mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
)
