import os
import tempfile

# Ensure matplotlib uses a non-GUI backend for headless initialization
os.environ['MPLBACKEND'] = 'Agg'

import stokes_cli

out = tempfile.mkdtemp(prefix='stokes-smoke-')
code = stokes_cli.main(['--out', out, '--no-cache', 'classify', '--a', '0+1.7320508075688772i', '--theta', 'pi/4'])
print('EXIT_CODE:', code)
print('OUTPUTS:', sorted(os.listdir(out)))
