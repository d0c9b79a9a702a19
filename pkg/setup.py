from setuptools import setup, find_packages

setup(
    name='sigdet',
    version='0.0.1',
    description='Sequential decentralized binary detection with signaling',
    packages=find_packages(exclude=['tests']),
    py_modules=['models_detection', 'belief', 'strategies', 'engine_evaluate', 'engine_solver',
                'structure_checks', 'main_sigdet'],
    install_requires=[
        'numpy',
        'pandas',
        'omegaconf',
        'tqdm',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': ['sigdet=main_sigdet:cli'],
    },
)
