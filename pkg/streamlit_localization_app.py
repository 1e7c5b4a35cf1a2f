#!/usr/bin/env python3
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go
import streamlit as st

from errors import LocalizationError
from paper_replay import fig6_frame, load_table, table3_points
from pathloss import (PAPER_MODEL, PathLossModel, assess_calibration,
                      estimate_distance, fit_model)
from geometry import Position3D
from simulator import load_scenario
from trilateration import SphereConstraint, locate

SCENARIO_DIR = Path(__file__).resolve().parent / 'scenarios'

# Page config
st.set_page_config(page_title="UAV RSSI Localization", layout="wide")


@st.cache_data
def load_calibration():
    model, report = fit_model(table3_points())
    frame, _ = fig6_frame()
    return model, report, frame


def calibration_section(model, report, frame):
    st.header("📈 Path-Loss Calibration")
    verdict = assess_calibration(report, model)

    c1, c2, c3 = st.columns(3)
    c1.metric("L", f"{model.exponent:.3f}")
    c2.metric("C", f"{model.intercept_db:.2f} dB")
    c3.metric("R²", f"{report.r_squared:.3f}", "🟢 usable" if verdict.usable else "🔴 rejected")

    measured = frame[frame['series'] == 'measured']
    fitted = frame[frame['series'] == 'fitted']
    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=measured['log10_distance'], y=measured['rssi_db'], mode='markers', name='Measured mean',
        error_y=dict(type='data', symmetric=False,
                     array=measured['ci95_hi'] - measured['rssi_db'],
                     arrayminus=measured['rssi_db'] - measured['ci95_lo'])))
    fig.add_trace(go.Scatter(x=fitted['log10_distance'], y=fitted['rssi_db'],
                             mode='lines', name='Fitted'))
    fig.update_layout(xaxis_title='log10(slant distance, m)', yaxis_title='RSSI (dB)', height=400)
    st.plotly_chart(fig, use_container_width=True, key="calibration_fit")

    rejected = load_table('table4_moteino')
    st.caption("Second module (flat response) for comparison")
    st.plotly_chart(px.line(rejected, x='nominal_m', y='mean_db', markers=True),
                    use_container_width=True, key="flat_module")


def locate_section(model):
    st.header("📍 Four-Station Fix")
    stations = load_table('field_stations')
    field = load_table('table5_field').set_index('station_id')

    cols = st.columns(len(stations))
    constraints, rows, failures = [], [], []
    for col, s in zip(cols, stations.itertuples()):
        rssi = col.number_input(f"{s.station_id} mean RSSI (dB)", -130.0, -20.0,
                                float(field.loc[s.station_id, 'mean_rssi_db']), 0.5,
                                key=f"rssi_{s.station_id}")
        try:
            est = estimate_distance(model, rssi)
        except LocalizationError as exc:
            failures.append(f"{s.station_id}: {exc}")
            continue
        rows.append({'Station': s.station_id, 'Mean RSSI': rssi, 'Estimated SD (m)': est.distance_m,
                     'Confidence': '🟡 low' if est.low_confidence else '🟢 ok'})
        constraints.append(SphereConstraint(Position3D(s.x_m, s.y_m, s.z_m), est.distance_m,
                                            s.station_id))
    table = pd.DataFrame(rows, columns=['Station', 'Mean RSSI', 'Estimated SD (m)', 'Confidence'])
    st.dataframe(table.style.format({'Estimated SD (m)': '{:.1f}'}),
                 use_container_width=True)
    if failures:
        st.error("🔴 No fix: " + "; ".join(failures))
        return

    try:
        fix = locate(constraints)
    except LocalizationError as exc:
        st.error(f"🔴 No fix: {type(exc).__name__}: {exc}")
        return
    p = fix.position
    st.success(f"UAV at ({p.x:.1f}, {p.y:.1f}, {p.z:.1f}) m via {fix.path}, "
               f"RMS radius mismatch {fix.residual_norm_m:.1f} m")

    fig = go.Figure()
    fig.add_trace(go.Scatter3d(x=stations['x_m'], y=stations['y_m'], z=stations['z_m'],
                               mode='markers+text', text=stations['station_id'], name='Stations'))
    fig.add_trace(go.Scatter3d(x=[p.x], y=[p.y], z=[p.z], mode='markers', name='Fix',
                               marker=dict(size=8, color='#ff6b6b')))
    fig.update_layout(height=500)
    st.plotly_chart(fig, use_container_width=True, key="fix_3d")


def simulation_section(model):
    st.header("🛰️ Simulator")
    scenarios = sorted(p.name for p in SCENARIO_DIR.glob('*.json'))
    if not scenarios:
        st.info("No scenarios found")
        return
    name = st.selectbox("Scenario", scenarios, key="scenario")
    seed = st.number_input("Seed", 0, 2 ** 31 - 1, 42, key="seed")

    if st.button("Run Simulation", type="primary"):
        from uav_locate import run_simulation
        scenario = load_scenario(SCENARIO_DIR / name).with_seed(int(seed))
        with st.spinner("Simulating..."), tempfile.TemporaryDirectory() as tmp:
            samples, reports, fixes = run_simulation(scenario, Path(tmp), model)

        st.write(f"{len(samples)} samples, {len(reports)} reports, {len(fixes)} fixes")
        truth = pd.DataFrame([{'x_m': w.position.x, 'y_m': w.position.y, 'z_m': w.position.z}
                              for w in scenario.waypoints])
        located = pd.DataFrame([{'x_m': f.outcome.position.x, 'y_m': f.outcome.position.y,
                                 'z_m': f.outcome.position.z} for f in fixes if f.ok])
        fig = go.Figure()
        fig.add_trace(go.Scatter3d(x=truth['x_m'], y=truth['y_m'], z=truth['z_m'],
                                   mode='lines+markers', name='Waypoints'))
        if not located.empty:
            fig.add_trace(go.Scatter3d(x=located['x_m'], y=located['y_m'], z=located['z_m'],
                                       mode='markers', name='Fixes'))
        st.plotly_chart(fig, use_container_width=True, key="sim_3d")

        tab1, tab2 = st.tabs(["Samples", "Fixes"])
        with tab1:
            st.dataframe(samples.head(50), use_container_width=True)
            st.download_button("Download Samples", samples.to_csv(index=False),
                               "samples.csv", "text/csv")
        with tab2:
            from station_net import fix_log_frame
            fix_log = fix_log_frame(fixes)
            st.dataframe(fix_log, use_container_width=True)
            st.download_button("Download Fixes", fix_log.to_csv(index=False),
                               "fixes.csv", "text/csv")


def main():
    st.title("📡 GPS-free UAV Localization Dashboard")
    fitted, report, frame = load_calibration()

    st.sidebar.header("⚙️ Model")
    source = st.sidebar.radio("Path-loss model", ["Published", "Refit from calibration", "Custom"],
                              key="model_source")
    if source == "Published":
        model = PAPER_MODEL
    elif source == "Refit from calibration":
        model = fitted
    else:
        model = PathLossModel(st.sidebar.number_input("L", 0.01, 10.0, 1.165, key="custom_L"),
                              st.sidebar.number_input("C (dB)", -150.0, 0.0, -56.134, key="custom_C"))
    st.sidebar.caption(f"L={model.exponent:.3f}, C={model.intercept_db:.2f} dB")
    d = np.array([100.0, 600.0])
    st.sidebar.caption(f"Range 100-600 m spans {model.exponent * 10 * np.log10(d[1] / d[0]):.1f} dB")

    calibration_section(fitted, report, frame)
    locate_section(model)
    simulation_section(model)


if __name__ == "__main__":
    main()
