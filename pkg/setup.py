from setuptools import find_packages, setup

setup(name='advfilt',
      packages=[package for package in find_packages()
                if package.startswith('advfilt')],
      install_requires=[
          'torch',
          'numpy',
          'scipy',
          'pyyaml',
          'tqdm',
          'tensorboard'
      ],
      extras_require={
          'test': ['pytest']
      },
      license='MIT',
      version="0.0.0",
      entry_points={
          'console_scripts': [
              'advfilt = advfilt.runner:main'
          ],
      })
