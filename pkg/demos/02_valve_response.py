"""Plunger lag, PWM drive and dispensed volume for a single nozzle.

Run: python3 demos/02_valve_response.py
"""

import math

import numpy as np

from spraysim.valve import PwmSignal, ValveParams, integrate_volume, nozzle_flow, pwm_waveform

params = ValveParams()
q_full = nozzle_flow(1.0, params)
print(f"full-open flow: {q_full:.4e} m^3/s ({q_full * 60000:.2f} L/min)")

# step response from closed: samples land on 1 - exp(-t / tau)
step = integrate_volume(np.full((11, 1), 100.0), 0.005, params)
for k in range(0, 11, 2):
    t = step.t[k]
    print(f"t={t * 1000:4.0f} ms  x={step.x_n[k, 0]:.4f}  closed form={1 - math.exp(-t / params.plunger_tau):.4f}")

# a 10 Hz drive at 75 % duty: the first 75 ms of each period are ON
sig = PwmSignal(frequency=10, duty=75)
ts = np.arange(0, 0.2, 0.025)
print("\nPWM 75 %:", " ".join("ON " if on else "off" for on in pwm_waveform(sig, ts)))

# explicit waveform vs duty-averaged valve over ten seconds
n = 10001
for duty in (75, 90, 100):
    avg = integrate_volume(np.full((n // 10 + 1, 1), float(duty)), 0.01, params).volume_l
    wave = integrate_volume(np.full((n, 1), float(duty)), 0.001, params, pwm_mode="waveform").volume_l
    print(f"duty {duty:3d}: averaged {avg:.3f} L, waveform {wave:.3f} L over 10 s")
