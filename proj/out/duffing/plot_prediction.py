#!/usr/bin/env python3
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open('prediction.csv')))
t = [float(r['t']) for r in rows]
fig, ax = plt.subplots()
ax.plot(t, [float(r['z_1']) for r in rows], label='z_1')
ax.plot(t, [float(r['z_2']) for r in rows], label='z_2')
ax.plot(t, [float(r['z_3']) for r in rows], label='z_3')
ax.plot(t, [float(r['x_1']) for r in rows], label='x_1')
ax.plot(t, [float(r['x_2']) for r in rows], label='x_2')
ax.plot(t, [float(r['u_1']) for r in rows], label='u_1')
ax.plot(t, [float(r['err']) for r in rows], label='err')
ax.set_xlabel('t')
ax.legend()
plt.savefig('prediction.png', dpi=150)
