from pathlib import Path

from streamlit.testing.v1 import AppTest

APP = str(Path(__file__).resolve().parent.parent / 'streamlit_localization_app.py')


def test_dashboard_renders():
    at = AppTest.from_file(APP, default_timeout=60).run()
    assert not at.exception
    assert any('UAV at' in s.value for s in at.success)


def test_simulation_button():
    at = AppTest.from_file(APP, default_timeout=60).run()
    at.button[0].click().run()
    assert not at.exception
    assert any('fixes' in m.value for m in at.markdown)


def test_refit_model_choice():
    at = AppTest.from_file(APP, default_timeout=60).run()
    at.sidebar.radio[0].set_value("Refit from calibration").run()
    assert not at.exception


def test_custom_model_with_unreachable_distance_shows_an_error():
    at = AppTest.from_file(APP, default_timeout=60).run()
    at.sidebar.radio[0].set_value("Custom").run()
    at.number_input(key="custom_L").set_value(0.01).run()
    at.number_input(key="rssi_GS1").set_value(-130.0).run()
    assert not at.exception
    assert any('No fix' in e.value for e in at.error)
